//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints its verdict line even when an earlier one fails.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mbp_rk::certificate::{certify, step_bounds, to_canonical};
use mbp_rk::integrator::{convergence_study, euler_step, simulate, SimulationConfig, TauChoice};
use mbp_rk::linalg::Matrix;
use mbp_rk::presets;
use mbp_rk::spatial::{apply_laplacian, inner, max_norm, Grid, InitialCondition, State};
use mbp_rk::stepping::{step_butcher, step_canonical, step_shu_osher};
use mbp_rk::tableau::{ssp_check, ButcherTableau, ShuOsherForm};
use mbp_rk::trace::{check_trace, read_trace_csv};
use rand::{RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed(limit: Duration, start: Instant) -> Result<String, String> {
    let dt = start.elapsed();
    ensure(dt < limit, || format!("took {dt:.2?}, limit {limit:?}"))?;
    Ok(format!("{dt:.2?}"))
}

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn five() -> [ButcherTableau; 4] {
    [
        presets::rk2_ssp(),
        presets::rk3_ssp(),
        presets::rk3_nondissipative(),
        presets::rk4_5stage(),
    ]
}

fn eigenvalue_regressions() -> Outcome {
    let start = Instant::now();
    let expected = [
        ("rk2-ssp", (3.0 - 2f64.sqrt()) / 2.0, 1e-9),
        ("rk3-ssp", 0.362228, 1e-6),
        ("rk3-nondissipative", (7.0 - 3.0 * 6f64.sqrt()) / 2.0, 1e-6),
        ("rk4-5stage", 1.706, 2e-3),
    ];
    let mut misses = Vec::new();
    let mut got = Vec::new();
    for (name, want, tol) in expected {
        let cert = certify(&presets::by_name(name).unwrap()).map_err(|e| e.to_string())?;
        got.push(format!("{name} {:.6}", cert.lambda_min));
        if (cert.lambda_min - want).abs() > tol {
            misses.push(format!("{name}: lambda {:.9} vs expected {want} +- {tol:e}", cert.lambda_min));
        }
    }
    let t = timed(Duration::from_secs(1), start)?;
    if misses.is_empty() {
        Ok(format!("{} ({t})", got.join(", ")))
    } else {
        Err(misses.join("; "))
    }
}

fn phi_regressions() -> Outcome {
    let expected: [(&str, Vec<Vec<f64>>); 3] = [
        ("rk2-ssp", vec![vec![1.0, 1.0], vec![0.0, 2.0]]),
        (
            "rk3-ssp",
            vec![vec![1.0, 3.0, 0.5], vec![0.0, 4.0, 0.5], vec![0.0, 0.0, 1.5]],
        ),
        (
            "rk3-nondissipative",
            vec![vec![1.0, 0.0, 2.0], vec![0.0, 1.0, 5.0], vec![0.0, 0.0, 6.0]],
        ),
    ];
    let mut worst = 0.0f64;
    for (name, want) in expected {
        let cert = certify(&presets::by_name(name).unwrap()).map_err(|e| e.to_string())?;
        let got = cert.phi.rows();
        for (gr, wr) in got.iter().zip(&want) {
            for (g, w) in gr.iter().zip(wr) {
                worst = worst.max((g - w).abs());
            }
        }
        ensure(worst <= 1e-12, || format!("{name}: deviation {worst:e}"))?;
    }
    Ok(format!("max deviation {worst:.1e}"))
}

fn ssp_verdicts() -> Outcome {
    let rk4 = presets::classic_rk4();
    let v = ssp_check(&rk4).map_err(|e| e.to_string())?;
    ensure(!v.is_ssp, || "classic RK4 passed the SSP test".into())?;
    let w = v.witness.ok_or("no witness for classic RK4")?;
    ensure(rk4.a().get(w.i, w.k) == 0.0, || {
        format!("witness ({}, {}) is not a zero entry", w.i, w.k)
    })?;
    for t in five() {
        let name = t.name().unwrap().to_owned();
        let cert = certify(&t).map_err(|e| e.to_string())?;
        ensure(cert.mbp, || format!("{name} not certified MBP"))?;
        let dissipative = name != "rk3-nondissipative";
        ensure(cert.energy_dissipative == dissipative, || {
            format!("{name}: energy_dissipative = {}", cert.energy_dissipative)
        })?;
    }
    Ok(format!("classic-rk4 witness a[{}][{}] = 0; four presets MBP, rk3-nondissipative energy-uncertified", w.i, w.k))
}

fn end_to_end(tau: TauChoice) -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for t in [presets::rk2_ssp(), presets::rk3_ssp(), presets::rk4_5stage()] {
        let name = t.name().unwrap().to_owned();
        let cfg = SimulationConfig::new(t, 0.1, 128, 2.0, tau, InitialCondition::Random(42));
        let trace = simulate(&cfg).map_err(|e| format!("{name}: {e}"))?;
        let stage_max = trace.max_stage_norm();
        ensure(stage_max <= 1.0 + 1e-14, || format!("{name}: stage max norm {stage_max:e}"))?;
        let path = dir.path().join(format!("{name}.csv"));
        trace.write_csv(&path).map_err(|e| e.to_string())?;
        let reread = read_trace_csv(&path).map_err(|e| e.to_string())?;
        let v = check_trace(&reread.rows).map_err(|e| e.to_string())?;
        match tau {
            TauChoice::AutoMbp => ensure(v.mbp_pass(), || format!("{name}: max_norm fails at {:?}", v.first_mbp_failure))?,
            _ => ensure(v.pass(), || {
                format!(
                    "{name}: energy fails at {:?}, max_norm at {:?}",
                    v.first_energy_failure, v.first_mbp_failure
                )
            })?,
        }
        summary.push(format!(
            "{name} {} steps, max {:.15}, worst dE {:.1e}",
            v.rows - 1,
            stage_max,
            v.worst_energy_delta.unwrap_or(0.0)
        ));
    }
    let t = timed(Duration::from_secs(10), start)?;
    Ok(format!("{} ({t})", summary.join("; ")))
}

fn euler_mbp() -> Outcome {
    let mut r = rng(3);
    let grid = Grid::new(128).map_err(|e| e.to_string())?;
    let h = grid.h();
    let mut worst = 0.0f64;
    for eps in [0.05, 0.1, 0.5] {
        let tau = 0.99 * (h * h / (4.0 * eps)).min(eps / 4.0);
        for _ in 0..1000 {
            let scale: f64 = r.random_range(0.0..=1.0);
            let values = (0..grid.n()).map(|_| scale * r.random_range(-1.0..=1.0)).collect();
            let u = State::new(grid, values).unwrap();
            worst = worst.max(max_norm(&euler_step(&u, tau, eps)));
        }
    }
    ensure(worst <= 1.0 + 1e-14, || format!("max norm {worst:e}"))?;
    Ok(format!("3000 states, worst max norm {worst:.15}"))
}

fn spectral_properties() -> Outcome {
    let grid = Grid::new(64).map_err(|e| e.to_string())?;
    let n = grid.n();
    let h = grid.h();
    let mut worst_mode = 0.0f64;
    for k in 0..n {
        let u = State::from_fn(grid, |x| (k as f64 * x).cos());
        let du = apply_laplacian(&u);
        let lam = grid.laplacian_eigenvalue(k);
        for (a, b) in du.values().iter().zip(u.values()) {
            worst_mode = worst_mode.max((a - lam * b).abs());
        }
    }
    ensure(worst_mode <= 1e-10, || format!("mode identity off by {worst_mode:e}"))?;

    let mut r = rng(11);
    for _ in 0..1000 {
        let values = (0..n).map(|_| r.random_range(-1.0..=1.0)).collect();
        let u = State::new(grid, values).unwrap();
        let q = -inner(&u, &apply_laplacian(&u));
        let bound = 4.0 / (h * h) * inner(&u, &u);
        ensure(q >= -1e-10 && q <= bound * (1.0 + 1e-12), || {
            format!("inverse inequality: 0 <= {q} <= {bound} fails")
        })?;
    }

    for _ in 0..1000 {
        let alpha: f64 = r.random_range(2.0..50.0);
        let alpha = if alpha == 2.0 { 2.0 + 1e-9 } else { alpha };
        let values = (0..n).map(|_| r.random_range(-1.0..=1.0)).collect();
        let v = State::new(grid, values).unwrap();
        let dv = apply_laplacian(&v);
        let w: Vec<f64> = v
            .values()
            .iter()
            .zip(dv.values())
            .map(|(a, b)| a + h * h / alpha * b)
            .collect();
        let lhs = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        ensure(lhs <= max_norm(&v) * (1.0 + 1e-14), || {
            format!("contraction fails at alpha {alpha}: {lhs} > {}", max_norm(&v))
        })?;
    }
    Ok(format!("mode identity {worst_mode:.1e}; 1000 inverse-inequality and 1000 contraction samples"))
}

fn representation_equivalence() -> Outcome {
    let g = |v: &[f64], out: &mut [f64]| {
        for (o, x) in out.iter_mut().zip(v) {
            *o = x - x * x * x;
        }
    };
    let mut r = rng(5);
    let mut worst = 0.0f64;
    let mut checked = Vec::new();
    for name in presets::NAMES {
        let t = presets::by_name(name).unwrap();
        let mut forms = vec![ShuOsherForm::from_butcher(&t)];
        if let Ok(cert) = certify(&t) {
            if let Some(f) = cert.ssp_form {
                forms.push(f);
            }
        }
        if *name == "rk4-5stage" {
            forms.push(presets::rk4_5stage_shu_osher());
        }
        let canonical = to_canonical(&t).ok();
        for _ in 0..100 {
            let u = [r.random_range(-1.0..=1.0)];
            let tau = r.random_range(0.0..0.5);
            let reference = step_butcher(&u, &t, tau, g)[0];
            for f in &forms {
                let got = step_shu_osher(&u, f, tau, g, |_, _| {})[0];
                worst = worst.max((got - reference).abs());
            }
            if let Some(cf) = &canonical {
                worst = worst.max((step_canonical(&u, cf, tau, g)[0] - reference).abs());
            }
        }
        checked.push(format!("{name}{}", if canonical.is_some() { "" } else { " (no canonical form)" }));
    }
    ensure(worst <= 1e-12, || format!("forms disagree by {worst:e}"))?;
    Ok(format!("{}; max disagreement {worst:.1e}", checked.join(", ")))
}

fn convergence_orders() -> Outcome {
    let taus = [8e-4, 4e-4, 2e-4];
    let ic = InitialCondition::Random(42);
    let mut out = Vec::new();
    for (t, order) in [
        (presets::rk2_ssp(), 2.0),
        (presets::rk3_ssp(), 3.0),
        (presets::rk4_5stage(), 4.0),
    ] {
        let name = t.name().unwrap().to_owned();
        let cert = certify(&t).map_err(|e| e.to_string())?;
        let h = Grid::new(64).map_err(|e| e.to_string())?.h();
        let bound = step_bounds(&cert, 0.25, h).and_then(|b| b.tau_ssp()).map_err(|e| e.to_string())?;
        ensure(taus[0] <= bound, || format!("{name}: tau {:e} above the max-bound limit {bound:e}", taus[0]))?;
        let table = convergence_study(&t, 0.25, 64, 0.5, &taus, &ic).map_err(|e| e.to_string())?;
        for row in &table.rows {
            if let Some(p) = row.observed_order {
                ensure((p - order).abs() <= 0.3, || format!("{name}: observed order {p:.3} at tau {:e}", row.tau))?;
            }
        }
        out.push(format!("{name} {:.3}", table.mean_order().unwrap_or(f64::NAN)));
    }
    Ok(out.join(", "))
}

/// Determinant by Gaussian elimination with partial pivoting.
fn det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        let (top, rest) = a.split_at_mut(c + 1);
        let pivot = &top[c];
        for row in rest {
            let f = row[c] / pivot[c];
            for (x, y) in row[c..].iter_mut().zip(&pivot[c..]) {
                *x -= f * y;
            }
        }
    }
    d
}

/// `A - x I` is positive definite iff every leading principal minor is
/// positive, which holds exactly when `x` lies below the smallest eigenvalue.
fn below_spectrum(m: &Matrix, x: f64) -> bool {
    let rows = m.rows();
    (1..=rows.len()).all(|k| {
        let minor: Vec<Vec<f64>> = rows[..k]
            .iter()
            .enumerate()
            .map(|(i, r)| r[..k].iter().enumerate().map(|(j, v)| if i == j { v - x } else { *v }).collect())
            .collect();
        det(minor) > 0.0
    })
}

fn bisection_lambda(m: &Matrix) -> f64 {
    let rows = m.rows();
    let mut lo = rows
        .iter()
        .enumerate()
        .map(|(i, r)| r[i] - r.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v.abs()).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
        - 1.0;
    let mut hi = rows.iter().enumerate().map(|(i, r)| r[i]).fold(f64::INFINITY, f64::min);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if below_spectrum(m, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn eigen_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for name in presets::NAMES {
        let t = presets::by_name(name).unwrap();
        let Ok(cert) = certify(&t) else {
            continue;
        };
        let oracle = bisection_lambda(&cert.delta_e);
        let gap = (oracle - cert.lambda_min).abs();
        ensure(gap <= 1e-8, || format!("{name}: jacobi {} vs bisection {oracle}", cert.lambda_min))?;
        worst = worst.max(gap);
    }
    Ok(format!("max gap {worst:.1e}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("eigenvalue regressions", eigenvalue_regressions),
        ("phi-matrix regressions", phi_regressions),
        ("ssp verdicts", ssp_verdicts),
        ("max-bound end to end", || end_to_end(TauChoice::AutoMbp)),
        ("energy monotonicity end to end", || end_to_end(TauChoice::AutoEnergy)),
        ("forward-euler max-bound property", euler_mbp),
        ("spectral and inequality properties", spectral_properties),
        ("representation equivalence", representation_equivalence),
        ("convergence orders", convergence_orders),
        ("eigen-solver oracle equivalence", eigen_oracle),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (idx, (label, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {label}: {detail}", idx + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {label}: {detail}", idx + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
