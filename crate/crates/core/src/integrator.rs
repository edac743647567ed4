//! Time stepping of the semi-discrete Allen-Cahn system with step-by-step
//! monitoring of the maximum bound and the discrete energy.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::certificate::{certify, step_bounds_with_mode, BoundMode, StabilityCertificate, StepBounds};
use crate::error::{Error, Monitor, Result};
use crate::spatial::{self, Grid, InitialCondition, State};
use crate::stepping::step_shu_osher;
use crate::tableau::{ButcherTableau, ShuOsherForm};
use crate::trace::{SimulationTrace, TraceMeta, TraceRow};

/// Allowed overshoot of `|u| <= 1`.
pub const MBP_SLACK: f64 = 1e-14;
/// Allowed per-step energy increase.
pub const ENERGY_SLACK: f64 = 1e-12;
/// Fraction of the certified bound used by the automatic step choices.
pub const AUTO_SAFETY: f64 = 0.9;

const MAX_STEPS: f64 = 1e8;

pub fn euler_step(u: &State, tau: f64, epsilon: f64) -> State {
    let g = spatial::rhs(u, epsilon);
    let values = u
        .values()
        .iter()
        .zip(g.values())
        .map(|(x, y)| x + tau * y)
        .collect();
    State::new(u.grid(), values).expect("same grid")
}

/// One step of `f` applied to the Allen-Cahn right-hand side.
pub fn rk_step(u: &State, f: &ShuOsherForm, tau: f64, epsilon: f64) -> State {
    rk_step_monitored(u, f, tau, epsilon).0
}

/// Like [`rk_step`], also returning the largest max-norm over all stages
/// (the result included).
pub fn rk_step_monitored(u: &State, f: &ShuOsherForm, tau: f64, epsilon: f64) -> (State, f64) {
    let h = u.grid().h();
    let mut worst = 0.0f64;
    let values = step_shu_osher(
        u.values(),
        f,
        tau,
        |v, out| spatial::rhs_into(v, h, epsilon, out),
        |_, v| worst = worst.max(spatial::max_abs(v)),
    );
    (State::new(u.grid(), values).expect("same grid"), worst)
}

/// Step size selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauChoice {
    Fixed(f64),
    /// `0.9 * tau_ssp`.
    AutoMbp,
    /// `0.9 * tau_energy`.
    AutoEnergy,
}

impl FromStr for TauChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto-mbp" => Ok(TauChoice::AutoMbp),
            "auto-energy" => Ok(TauChoice::AutoEnergy),
            other => other
                .parse::<f64>()
                .map(TauChoice::Fixed)
                .map_err(|_| Error::Config(format!("tau must be a number, auto-mbp or auto-energy, got {other:?}"))),
        }
    }
}

impl fmt::Display for TauChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauChoice::Fixed(t) => write!(f, "{t}"),
            TauChoice::AutoMbp => f.write_str("auto-mbp"),
            TauChoice::AutoEnergy => f.write_str("auto-energy"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub scheme: ButcherTableau,
    pub epsilon: f64,
    pub n: usize,
    pub t_final: f64,
    pub tau: TauChoice,
    pub ic: InitialCondition,
    pub bound_mode: BoundMode,
}

impl SimulationConfig {
    pub fn new(scheme: ButcherTableau, epsilon: f64, n: usize, t_final: f64, tau: TauChoice, ic: InitialCondition) -> Self {
        Self {
            scheme,
            epsilon,
            n,
            t_final,
            tau,
            ic,
            bound_mode: BoundMode::Safe,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config(format!("t_final must be nonnegative, got {}", self.t_final)));
        }
        if let TauChoice::Fixed(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("tau must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

/// Everything a run needs once the configuration is resolved.
struct Plan {
    grid: Grid,
    form: ShuOsherForm,
    tau: f64,
    cert: Option<StabilityCertificate>,
    bounds: Option<StepBounds>,
    hard_mbp: bool,
    hard_energy: bool,
}

fn plan(cfg: &SimulationConfig, u0: &State) -> Result<Plan> {
    let grid = u0.grid();
    let cert = certify(&cfg.scheme);
    let automatic = !matches!(cfg.tau, TauChoice::Fixed(_));
    let cert = match cert {
        Ok(c) => Some(c),
        Err(e) if automatic => {
            return Err(Error::Config(format!("automatic step needs a certificate: {e}")))
        }
        Err(_) => None,
    };
    let bounds = cert
        .as_ref()
        .map(|c| step_bounds_with_mode(c, cfg.epsilon, grid.h(), cfg.bound_mode))
        .transpose()?;

    let tau = match cfg.tau {
        TauChoice::Fixed(t) => t,
        TauChoice::AutoMbp => {
            let b = bounds.as_ref().expect("certificate present");
            let t = b
                .tau_ssp()
                .map_err(|_| Error::Config("auto-mbp needs a maximum-bound preserving scheme".into()))?;
            AUTO_SAFETY * t
        }
        TauChoice::AutoEnergy => {
            let c = cert.as_ref().expect("certificate present");
            let b = bounds.as_ref().expect("certificate present");
            match b.tau_energy() {
                Ok(t) => AUTO_SAFETY * t,
                Err(Error::NonPositiveLambda { lambda }) => {
                    return Err(Error::Config(format!(
                        "auto-energy needs a positive definite energy discriminant, but lambda = {lambda} <= 0"
                    )))
                }
                Err(_) => {
                    return Err(Error::Config(format!(
                        "auto-energy needs a maximum-bound preserving scheme (lambda = {})",
                        c.lambda_min
                    )))
                }
            }
        }
    };

    let starts_bounded = spatial::max_norm(u0) <= 1.0 + MBP_SLACK;
    if automatic && !starts_bounded {
        return Err(Error::Config(format!(
            "initial state has max norm {} > 1; the bounds do not apply",
            spatial::max_norm(u0)
        )));
    }

    let form = cert
        .as_ref()
        .and_then(|c| c.ssp_form.clone())
        .unwrap_or_else(|| ShuOsherForm::from_butcher(&cfg.scheme));

    Ok(Plan {
        grid,
        form,
        tau,
        cert,
        bounds,
        hard_mbp: automatic,
        hard_energy: cfg.tau == TauChoice::AutoEnergy,
    })
}

/// Step sizes covering `[0, t_final]`, the last one shortened to land on
/// `t_final`.
fn schedule(t_final: f64, tau: f64) -> Result<(usize, Option<f64>)> {
    let ratio = t_final / tau;
    if ratio > MAX_STEPS {
        return Err(Error::Config(format!("{ratio:.3e} steps requested; refusing more than {MAX_STEPS:e}")));
    }
    let full = ratio.floor() as usize;
    let rest = t_final - full as f64 * tau;
    if rest > 1e-12 * t_final.max(tau) {
        Ok((full, Some(rest)))
    } else {
        Ok((full, None))
    }
}

/// Runs a simulation and records one trace row per step.
///
/// Under `auto-mbp` a max-norm breach (at any stage) aborts with
/// [`Error::BoundViolation`]; under `auto-energy` an energy increase does
/// too. With a fixed step every breach is kept as a warning.
pub fn simulate(cfg: &SimulationConfig) -> Result<SimulationTrace> {
    cfg.validate()?;
    let grid = Grid::new(cfg.n)?;
    let u0 = cfg.ic.build(grid)?;
    simulate_from(cfg, u0)
}

/// [`simulate`] from an explicit initial state; `cfg.n` and `cfg.ic` only
/// label the trace.
pub fn simulate_from(cfg: &SimulationConfig, u0: State) -> Result<SimulationTrace> {
    cfg.validate()?;
    let plan = plan(cfg, &u0)?;
    let (full, partial) = schedule(cfg.t_final, plan.tau)?;
    let eps = cfg.epsilon;

    let meta = TraceMeta {
        scheme: cfg.scheme.name().unwrap_or("custom").to_owned(),
        epsilon: eps,
        n: plan.grid.n(),
        h: plan.grid.h(),
        tau: plan.tau,
        tau_choice: cfg.tau.to_string(),
        t_final: cfg.t_final,
        ic: cfg.ic.to_string(),
        bound_mode: cfg.bound_mode,
        bounds: plan.bounds,
        lambda_min: plan.cert.as_ref().map(|c| c.lambda_min),
        ssp_ratio: plan.cert.as_ref().and_then(|c| c.ssp_ratio),
        mbp_certified: plan.cert.as_ref().map(|c| c.mbp),
        energy_certified: plan.cert.as_ref().map(|c| c.energy_dissipative),
    };

    let mut u = u0;
    let mut energy = spatial::discrete_energy(&u, eps);
    let starts_bounded = spatial::max_norm(&u) <= 1.0 + MBP_SLACK;
    let mut rows = vec![TraceRow {
        step: 0,
        time: 0.0,
        max_norm: spatial::max_norm(&u),
        energy,
        energy_delta: 0.0,
        stage_max_norm: spatial::max_norm(&u),
    }];
    let mut warnings = Vec::new();
    let mut warned = (false, false);

    let total = full + usize::from(partial.is_some());
    for step in 1..=total {
        let (dt, time) = if step <= full {
            let t = if step == full && partial.is_none() {
                cfg.t_final
            } else {
                step as f64 * plan.tau
            };
            (plan.tau, t)
        } else {
            (partial.expect("partial step"), cfg.t_final)
        };
        let (next, stage_max) = rk_step_monitored(&u, &plan.form, dt, eps);
        let next_energy = spatial::discrete_energy(&next, eps);
        let row = TraceRow {
            step,
            time,
            max_norm: spatial::max_norm(&next),
            energy: next_energy,
            energy_delta: next_energy - energy,
            stage_max_norm: stage_max,
        };

        if starts_bounded && row.stage_max_norm > 1.0 + MBP_SLACK {
            if plan.hard_mbp {
                return Err(Error::BoundViolation {
                    step,
                    monitor: Monitor::MaxBound,
                    value: row.stage_max_norm,
                });
            }
            if !warned.0 {
                warned.0 = true;
                warnings.push(format!(
                    "max-bound exceeded first at step {step}: stage max norm {:e}",
                    row.stage_max_norm
                ));
            }
        }
        if row.energy_delta > ENERGY_SLACK {
            if plan.hard_energy {
                return Err(Error::BoundViolation {
                    step,
                    monitor: Monitor::Energy,
                    value: row.energy_delta,
                });
            }
            if !warned.1 {
                warned.1 = true;
                warnings.push(format!(
                    "energy increased first at step {step}: delta {:e}",
                    row.energy_delta
                ));
            }
        }

        rows.push(row);
        u = next;
        energy = next_energy;
    }

    Ok(SimulationTrace {
        meta,
        rows,
        warnings,
        final_state: u,
    })
}

/// Integrates without monitors; used by the convergence study.
pub fn integrate(u0: &State, form: &ShuOsherForm, tau: f64, epsilon: f64, t_final: f64) -> Result<State> {
    let (full, partial) = schedule(t_final, tau)?;
    let mut u = u0.clone();
    for _ in 0..full {
        u = rk_step(&u, form, tau, epsilon);
    }
    if let Some(dt) = partial {
        u = rk_step(&u, form, dt, epsilon);
    }
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub tau: f64,
    /// Max-norm error at `t_final` against the reference solution.
    pub error: f64,
    /// `log(e_prev / e) / log(tau_prev / tau)` against the previous row.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub scheme: String,
    pub tau_ref: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Mean of the observed orders.
    pub fn mean_order(&self) -> Option<f64> {
        let orders: Vec<f64> = self.rows.iter().filter_map(|r| r.observed_order).collect();
        (!orders.is_empty()).then(|| orders.iter().sum::<f64>() / orders.len() as f64)
    }
}

/// Errors at `t_final` for each step size against a reference run with
/// `min(taus) / 16`. Rows come back sorted by decreasing `tau`; runs execute
/// on separate threads.
pub fn convergence_study(
    scheme: &ButcherTableau,
    epsilon: f64,
    n: usize,
    t_final: f64,
    taus: &[f64],
    ic: &InitialCondition,
) -> Result<ConvergenceTable> {
    if taus.is_empty() || taus.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::Config("step sizes must be a nonempty list of positive numbers".into()));
    }
    if !(epsilon > 0.0) || !(t_final > 0.0) {
        return Err(Error::Config("epsilon and t_final must be positive".into()));
    }
    let grid = Grid::new(n)?;
    let u0 = ic.build(grid)?;
    let form = ShuOsherForm::from_butcher(scheme);
    let mut taus = taus.to_vec();
    taus.sort_by(|a, b| b.total_cmp(a));
    let tau_ref = taus[taus.len() - 1] / 16.0;

    let mut all = taus.clone();
    all.push(tau_ref);
    let finals: Vec<Result<State>> = std::thread::scope(|scope| {
        let handles: Vec<_> = all
            .iter()
            .map(|&tau| {
                let (u0, form) = (&u0, &form);
                scope.spawn(move || integrate(u0, form, tau, epsilon, t_final))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("integration thread")).collect()
    });
    let mut finals = finals.into_iter().collect::<Result<Vec<_>>>()?;
    let reference = finals.pop().expect("reference run");

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(taus.len());
    for (tau, u) in taus.iter().zip(&finals) {
        let error = u
            .values()
            .iter()
            .zip(reference.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let observed_order = rows
            .last()
            .map(|prev: &ConvergenceRow| (prev.error / error).ln() / (prev.tau / tau).ln());
        rows.push(ConvergenceRow {
            tau: *tau,
            error,
            observed_order,
        });
    }
    Ok(ConvergenceTable {
        scheme: scheme.name().unwrap_or("custom").to_owned(),
        tau_ref,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::tri::LowerTriangular;

    fn euler_form() -> ShuOsherForm {
        ShuOsherForm::new(
            LowerTriangular::from_rows(vec![vec![1.0]]).unwrap(),
            LowerTriangular::from_rows(vec![vec![1.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn euler_fixed_points() {
        let g = Grid::new(16).unwrap();
        assert!(euler_step(&State::constant(g, 0.0), 0.3, 0.1).values().iter().all(|&x| x == 0.0));
        assert!(euler_step(&State::constant(g, 1.0), 7.0, 0.1).values().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn zero_step_is_identity() {
        let g = Grid::new(16).unwrap();
        let u = InitialCondition::Random(1).build(g).unwrap();
        let f = ShuOsherForm::from_butcher(&presets::rk3_ssp());
        let v = rk_step(&u, &f, 0.0, 0.1);
        for (a, b) in u.values().iter().zip(v.values()) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn single_stage_form_is_euler() {
        let g = Grid::new(32).unwrap();
        let u = InitialCondition::Random(5).build(g).unwrap();
        let a = rk_step(&u, &euler_form(), 1e-3, 0.1);
        let b = euler_step(&u, 1e-3, 0.1);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-15);
        }
    }

    #[test]
    fn schedule_shortens_the_last_step() {
        let (full, rest) = schedule(1.0, 0.3).unwrap();
        assert_eq!(full, 3);
        assert!((rest.unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(schedule(1.0, 0.25).unwrap(), (4, None));
        assert_eq!(schedule(0.0, 0.25).unwrap(), (0, None));
    }

    #[test]
    fn zero_final_time_gives_one_row() {
        let cfg = SimulationConfig::new(
            presets::rk2_ssp(),
            0.1,
            32,
            0.0,
            TauChoice::AutoMbp,
            InitialCondition::Random(1),
        );
        let trace = simulate(&cfg).unwrap();
        assert_eq!(trace.rows.len(), 1);
        assert_eq!(trace.rows[0].step, 0);
    }

    #[test]
    fn nondissipative_scheme_has_no_auto_energy_step() {
        let cfg = SimulationConfig::new(
            presets::rk3_nondissipative(),
            0.1,
            32,
            0.1,
            TauChoice::AutoEnergy,
            InitialCondition::Random(1),
        );
        match simulate(&cfg) {
            Err(Error::Config(msg)) => assert!(msg.contains("lambda"), "{msg}"),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn non_ssp_scheme_has_no_auto_mbp_step() {
        let cfg = SimulationConfig::new(
            presets::classic_rk4(),
            0.1,
            32,
            0.1,
            TauChoice::AutoMbp,
            InitialCondition::Random(1),
        );
        assert!(matches!(simulate(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn oversized_fixed_step_only_warns() {
        let cfg = SimulationConfig::new(
            presets::rk2_ssp(),
            0.1,
            64,
            0.5,
            TauChoice::Fixed(0.05),
            InitialCondition::Random(2),
        );
        let trace = simulate(&cfg).unwrap();
        assert!(!trace.warnings.is_empty());
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = SimulationConfig::new(
            presets::rk2_ssp(),
            0.1,
            64,
            1.0,
            TauChoice::Fixed(-1.0),
            InitialCondition::Random(2),
        );
        assert!(matches!(simulate(&cfg), Err(Error::Config(_))));
        cfg.tau = TauChoice::Fixed(0.01);
        cfg.epsilon = 0.0;
        assert!(matches!(simulate(&cfg), Err(Error::Config(_))));
        cfg.epsilon = 0.1;
        cfg.n = 2;
        assert!(matches!(simulate(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn tau_choice_parsing() {
        assert_eq!("auto-mbp".parse::<TauChoice>().unwrap(), TauChoice::AutoMbp);
        assert_eq!("auto-energy".parse::<TauChoice>().unwrap(), TauChoice::AutoEnergy);
        assert_eq!("1e-3".parse::<TauChoice>().unwrap(), TauChoice::Fixed(1e-3));
        assert!("fast".parse::<TauChoice>().is_err());
    }
}
