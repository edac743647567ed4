use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbp-rk"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn mbp-rk")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["certify", "rk2-ssp", "--epsilon", "0.1", "--grid-n", "128"], dir.path());
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let lam = report["lambda_min"].as_f64().unwrap();
    assert!((lam - (3.0 - 2f64.sqrt()) / 2.0).abs() < 1e-12);
    assert!(report["bounds"]["tau_energy"].as_f64().unwrap() > 0.0);

    assert_eq!(code(&run(&["certify", "rk3-nondissipative"], dir.path())), 2);
    assert_eq!(code(&run(&["certify", "classic-rk4"], dir.path())), 3);
    assert_eq!(code(&run(&["certify", "no-such-scheme"], dir.path())), 64);
    assert_eq!(code(&run(&["certify"], dir.path())), 64);
    assert_eq!(code(&run(&["certify", "rk2-ssp", "--grid-n", "2"], dir.path())), 64);
    assert_eq!(code(&run(&["--help"], dir.path())), 0);

    let o = run(&["certify", "rk2-ssp", "--bound-mode", "relaxed"], dir.path());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["bounds"]["tau0"], report["bounds"]["tau0_relaxed"]);
    assert_eq!(code(&run(&["certify", "rk2-ssp", "--bound-mode", "loose"], dir.path())), 64);
}

#[test]
fn certify_reads_tableau_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("heun.json"), r#"{"s": 2, "a": [[1.0]], "b": [0.5, 0.5]}"#).unwrap();
    assert_eq!(code(&run(&["certify", "heun.json"], dir.path())), 0);

    std::fs::write(dir.path().join("broken.json"), r#"{"s": 2, "a": [[1.0]]"#).unwrap();
    assert_eq!(code(&run(&["certify", "broken.json"], dir.path())), 65);

    std::fs::write(dir.path().join("bad.json"), r#"{"s": 2, "a": [[1.0]], "b": [0.5, 0.6]}"#).unwrap();
    assert_eq!(code(&run(&["certify", "bad.json"], dir.path())), 65);

    // A file shadows the preset of the same name.
    std::fs::write(dir.path().join("rk3-ssp"), r#"{"s": 2, "a": [[1.0]], "b": [0.5, 0.5]}"#).unwrap();
    let o = run(&["certify", "rk3-ssp"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("overrides"));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["stages"], 2);
}

#[test]
fn simulate_then_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "simulate", "rk3-ssp", "--epsilon", "0.1", "--grid-n", "128", "--t-final", "2", "--tau",
            "auto-energy", "--ic", "random:42", "--out", "t.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("steps"));
    let o = run(&["check", "t.csv"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict: pass"));

    // Raise the energy on one row.
    let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let idx = lines.iter().position(|l| l.starts_with("5,")).unwrap();
    let mut fields: Vec<String> = lines[idx].split(',').map(str::to_owned).collect();
    fields[4] = "1.0e-1".into();
    lines[idx] = fields.join(",");
    std::fs::write(dir.path().join("bad.csv"), lines.join("\n")).unwrap();
    let o = run(&["check", "bad.csv"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("first energy failure at step 5"));

    std::fs::write(dir.path().join("empty.csv"), "").unwrap();
    assert_eq!(code(&run(&["check", "empty.csv"], dir.path())), 65);
    assert_eq!(code(&run(&["check", "missing.csv"], dir.path())), 65);
}

#[test]
fn simulate_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["simulate", "rk3-nondissipative", "--t-final", "1", "--tau", "auto-energy", "--out", "x.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda"));

    let o = run(&["simulate", "rk2-ssp", "--t-final", "0", "--out", "zero.csv"], dir.path());
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("zero.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2);

    let o = run(&["simulate", "rk2-ssp", "--t-final", "1", "--tau", "-1", "--out", "x.csv"], dir.path());
    assert_eq!(code(&o), 64);
    let o = run(&["simulate", "rk2-ssp", "--t-final", "1", "--ic", "wave:3", "--out", "x.csv"], dir.path());
    assert_eq!(code(&o), 64);
    let o = run(&["simulate", "classic-rk4", "--t-final", "1", "--out", "x.csv"], dir.path());
    assert_eq!(code(&o), 64);

    // Explicit steps beyond the bound only warn.
    let o = run(&["simulate", "rk2-ssp", "--t-final", "0.5", "--tau", "0.5", "--out", "big.csv"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(code(&run(&["check", "big.csv"], dir.path())), 1);
}

#[test]
fn simulate_from_state_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["simulate", "rk2-ssp", "--grid-n", "32", "--t-final", "0.1", "--out", "a.csv", "--save-state", "u.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let o = run(
        &["simulate", "rk2-ssp", "--grid-n", "32", "--t-final", "0.1", "--ic", "file:u.csv", "--out", "b.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(
        &["simulate", "rk2-ssp", "--grid-n", "64", "--t-final", "0.1", "--ic", "file:u.csv", "--out", "c.csv"],
        dir.path(),
    );
    assert_ne!(code(&o), 0);
}

#[test]
fn study_prints_orders() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["study", "rk2-ssp", "--epsilon", "0.25", "--grid-n", "64", "--t-final", "0.5", "--taus", "8e-4,4e-4,2e-4", "--ic", "random:42"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let out = String::from_utf8_lossy(&o.stdout);
    let last = out.lines().last().unwrap();
    let order: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!((order - 2.0).abs() < 0.2, "{out}");
}
