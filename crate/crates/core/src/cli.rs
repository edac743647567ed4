//! Command-line front end.
//!
//! Exit codes: `certify` returns 0 (energy-dissipative and maximum-bound
//! preserving), 2 (maximum-bound preserving only) or 3 (not maximum-bound
//! preserving); `check` returns 0 or 1; usage errors are 64, malformed input
//! 65, monitor violations 70 and output failures 74.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::certificate::{certify, step_bounds_with_mode, BoundMode, CanonicalForm, EnergyVerdict, StepBounds};
use crate::error::Error;
use crate::integrator::{convergence_study, simulate, SimulationConfig, TauChoice};
use crate::linalg::Matrix;
use crate::presets;
use crate::spatial::{write_state_csv, Grid, InitialCondition};
use crate::tableau::{parse_tableau_json, verify_order, ButcherTableau, SspWitness};
use crate::trace::{check_trace, read_trace_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_MBP_ONLY: i32 = 2;
pub const EXIT_NOT_MBP: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_VIOLATION: i32 = 70;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Parser)]
#[command(name = "mbp-rk", version, about = "Certify and run Runge-Kutta schemes on the 1D Allen-Cahn equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the maximum-bound and energy certificate of a scheme.
    Certify {
        /// Preset name or path to a tableau JSON file.
        scheme: String,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long = "grid-n", default_value_t = 128)]
        grid_n: usize,
        #[arg(long = "bound-mode", default_value = "safe", value_parser = parse_bound_mode)]
        bound_mode: BoundMode,
    },
    /// Run a periodic Allen-Cahn simulation and write its trace.
    Simulate {
        scheme: String,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long = "grid-n", default_value_t = 128)]
        grid_n: usize,
        #[arg(long = "t-final")]
        t_final: f64,
        /// A positive number, `auto-mbp` or `auto-energy`.
        #[arg(long, default_value = "auto-mbp")]
        tau: String,
        /// `random:<seed>`, `cosine:<k>` or `file:<path>`.
        #[arg(long, default_value = "random:42")]
        ic: String,
        #[arg(long = "bound-mode", default_value = "safe", value_parser = parse_bound_mode)]
        bound_mode: BoundMode,
        /// Trace CSV destination.
        #[arg(long)]
        out: PathBuf,
        /// Also write the final state as a single-column CSV.
        #[arg(long = "save-state")]
        save_state: Option<PathBuf>,
    },
    /// Re-check the monitors of a trace file.
    Check { trace: PathBuf },
    /// Empirical convergence order against a fine-step reference.
    Study {
        scheme: String,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[arg(long = "grid-n", default_value_t = 64)]
        grid_n: usize,
        #[arg(long = "t-final", default_value_t = 0.5)]
        t_final: f64,
        /// Comma-separated step sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        taus: Vec<f64>,
        #[arg(long, default_value = "cosine:1")]
        ic: String,
    },
}

fn parse_bound_mode(s: &str) -> Result<BoundMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Command failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) | Error::UnknownScheme(_) => EXIT_USAGE,
            Error::BoundViolation { .. } => EXIT_VIOLATION,
            Error::Io { .. } => EXIT_IO,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<i32, Failure>;

/// Runs the CLI with explicit arguments and output streams; returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Certify {
            scheme,
            epsilon,
            grid_n,
            bound_mode,
        } => cmd_certify(&scheme, epsilon, grid_n, bound_mode, out, err),
        Command::Simulate {
            scheme,
            epsilon,
            grid_n,
            t_final,
            tau,
            ic,
            bound_mode,
            out: path,
            save_state,
        } => cmd_simulate(
            &scheme,
            SimArgs {
                epsilon,
                grid_n,
                t_final,
                tau: &tau,
                ic: &ic,
                bound_mode,
                out: &path,
                save_state: save_state.as_deref(),
            },
            out,
            err,
        ),
        Command::Check { trace } => cmd_check(&trace, out),
        Command::Study {
            scheme,
            epsilon,
            grid_n,
            t_final,
            taus,
            ic,
        } => cmd_study(&scheme, epsilon, grid_n, t_final, &taus, &ic, out, err),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// A readable file wins over a preset of the same name.
pub fn resolve_scheme(arg: &str, err: &mut dyn Write) -> Result<ButcherTableau, Error> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let t = parse_tableau_json(&text)?;
        if presets::by_name(arg).is_some() {
            let _ = writeln!(err, "warning: file {arg:?} overrides the preset of the same name");
        }
        return Ok(match t.name() {
            Some(_) => t,
            None => t.with_name(arg),
        });
    }
    presets::by_name(arg).ok_or_else(|| Error::UnknownScheme(arg.to_owned()))
}

#[derive(Serialize)]
struct CertificateReport<'a> {
    scheme: &'a str,
    stages: usize,
    order: usize,
    mbp: bool,
    energy_dissipative: bool,
    energy_verdict: EnergyVerdict,
    energy_guaranteed: bool,
    ssp_witness: Option<SspWitness>,
    ssp_ratio: Option<f64>,
    lambda_min: f64,
    phi: &'a Matrix,
    delta_e: &'a Matrix,
    canonical: &'a CanonicalForm,
    grid_n: usize,
    bounds: StepBounds,
}

fn cmd_certify(
    scheme: &str,
    epsilon: f64,
    grid_n: usize,
    mode: BoundMode,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let grid = Grid::new(grid_n)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")).into());
    }
    let t = resolve_scheme(scheme, err)?;
    let cert = certify(&t)?;
    let bounds = step_bounds_with_mode(&cert, epsilon, grid.h(), mode)?;
    let order = (1..=4)
        .take_while(|&p| verify_order(&t, p).unwrap_or(false))
        .last()
        .unwrap_or(0);
    let report = CertificateReport {
        scheme: t.name().unwrap_or(scheme),
        stages: cert.stages,
        order,
        mbp: cert.mbp,
        energy_dissipative: cert.energy_dissipative,
        energy_verdict: cert.energy,
        energy_guaranteed: cert.energy_guaranteed(),
        ssp_witness: cert.ssp_witness,
        ssp_ratio: cert.ssp_ratio,
        lambda_min: cert.lambda_min,
        phi: &cert.phi,
        delta_e: &cert.delta_e,
        canonical: &cert.canonical,
        grid_n,
        bounds,
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    writeln!(out, "{text}").map_err(|e| Failure {
        code: EXIT_IO,
        message: e.to_string(),
    })?;
    Ok(match (cert.mbp, cert.energy_dissipative) {
        (true, true) => EXIT_OK,
        (true, false) => EXIT_MBP_ONLY,
        (false, _) => EXIT_NOT_MBP,
    })
}

struct SimArgs<'a> {
    epsilon: f64,
    grid_n: usize,
    t_final: f64,
    tau: &'a str,
    ic: &'a str,
    bound_mode: BoundMode,
    out: &'a Path,
    save_state: Option<&'a Path>,
}

fn cmd_simulate(scheme: &str, args: SimArgs<'_>, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let tau: TauChoice = args.tau.parse()?;
    let ic: InitialCondition = args.ic.parse()?;
    let t = resolve_scheme(scheme, err)?;
    let mut cfg = SimulationConfig::new(t, args.epsilon, args.grid_n, args.t_final, tau, ic);
    cfg.bound_mode = args.bound_mode;
    let trace = simulate(&cfg)?;
    trace.write_csv(args.out)?;
    if let Some(path) = args.save_state {
        write_state_csv(&trace.final_state, path)?;
    }
    for w in &trace.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    let worst_delta = trace.rows.iter().skip(1).map(|r| r.energy_delta).fold(f64::NEG_INFINITY, f64::max);
    let _ = writeln!(
        out,
        "{}: {} steps, tau = {:.6e}, max stage norm = {:.16e}, max energy delta = {}, final energy = {:.12e}",
        trace.meta.scheme,
        trace.rows.len() - 1,
        trace.meta.tau,
        trace.max_stage_norm(),
        if worst_delta.is_finite() { format!("{worst_delta:.6e}") } else { "n/a".to_owned() },
        trace.rows.last().map_or(f64::NAN, |r| r.energy),
    );
    Ok(EXIT_OK)
}

fn cmd_check(path: &Path, out: &mut dyn Write) -> CmdResult {
    let parsed = read_trace_csv(path).map_err(|e| match e {
        Error::Io { .. } => Failure {
            code: EXIT_DATA,
            message: e.to_string(),
        },
        other => other.into(),
    })?;
    let v = check_trace(&parsed.rows)?;
    let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
    let _ = writeln!(out, "rows: {}", v.rows);
    let _ = writeln!(
        out,
        "worst max_norm: {:.17e} at step {} [{}]",
        v.worst_max_norm,
        v.worst_max_norm_step,
        mark(v.mbp_pass())
    );
    match (v.worst_energy_delta, v.worst_energy_delta_step) {
        (Some(d), Some(step)) => {
            let _ = writeln!(out, "worst energy_delta: {d:.17e} at step {step} [{}]", mark(v.energy_pass()));
        }
        _ => {
            let _ = writeln!(out, "worst energy_delta: n/a (initial row only) [pass]");
        }
    }
    if let Some(step) = v.first_mbp_failure {
        let _ = writeln!(out, "first max-bound failure at step {step}");
    }
    if let Some(step) = v.first_energy_failure {
        let _ = writeln!(out, "first energy failure at step {step}");
    }
    let _ = writeln!(out, "verdict: {}", mark(v.pass()));
    Ok(if v.pass() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

#[allow(clippy::too_many_arguments)]
fn cmd_study(
    scheme: &str,
    epsilon: f64,
    grid_n: usize,
    t_final: f64,
    taus: &[f64],
    ic: &str,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let ic: InitialCondition = ic.parse()?;
    let t = resolve_scheme(scheme, err)?;
    let table = convergence_study(&t, epsilon, grid_n, t_final, taus, &ic)?;
    let _ = writeln!(out, "# scheme: {}, reference tau = {:.6e}", table.scheme, table.tau_ref);
    let _ = writeln!(out, "tau,error,observed_order");
    for r in &table.rows {
        let order = r.observed_order.map_or_else(String::new, |o| format!("{o:.4}"));
        let _ = writeln!(out, "{:.6e},{:.6e},{}", r.tau, r.error, order);
    }
    Ok(EXIT_OK)
}
