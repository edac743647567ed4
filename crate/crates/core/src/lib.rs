//! Certification and simulation of explicit Runge-Kutta schemes for the
//! Allen-Cahn equation `u_t = eps u_xx + (u - u^3) / eps`.
//!
//! - [`tableau`]: Butcher and Shu-Osher representations, SSP test and order
//!   conditions.
//! - [`certificate`]: canonical form, the `Phi` / `Delta_E` matrices and
//!   step-size bounds.
//! - [`spatial`]: periodic finite differences, energy and initial data.
//! - [`integrator`]: monitored time stepping and convergence studies.

// NaN must fail every tolerance check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod cli;
pub mod error;
pub mod integrator;
pub mod linalg;
pub mod presets;
pub mod spatial;
pub mod stepping;
pub mod tableau;
pub mod trace;
pub mod tri;

pub use certificate::{
    certify, phi_matrix, step_bounds, step_bounds_with_mode, to_canonical, BoundMode, CanonicalForm,
    EnergyVerdict, StabilityCertificate, StepBounds,
};
pub use error::{Error, Monitor, Result};
pub use integrator::{convergence_study, simulate, simulate_from, SimulationConfig, TauChoice};
pub use linalg::Matrix;
pub use spatial::{Grid, InitialCondition, State};
pub use tableau::{
    construct_shu_osher, ssp_check, validate_tableau, verify_order, ButcherTableau, ShuOsherForm,
    SspVerdict, SspWitness,
};
pub use trace::{check_trace, SimulationTrace, TraceRow, TraceVerdict};
pub use tri::LowerTriangular;
