use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which step monitor tripped during a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monitor {
    MaxBound,
    Energy,
}

impl std::fmt::Display for Monitor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Monitor::MaxBound => f.write_str("max-bound"),
            Monitor::Energy => f.write_str("energy"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("ssp test not applicable: sub-diagonal entry a[{stage}][{}] is zero", .stage - 1)]
    NonApplicable { stage: usize },

    #[error("entry a[{i}][{k}] = {value} is not strictly positive")]
    PositivityViolated { i: usize, k: usize, value: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("order conditions are only available up to order 4 (asked for {0})")]
    Unsupported(usize),

    #[error("sub-diagonal entry of stage {stage} is zero; canonical form does not exist")]
    SubdiagonalZero { stage: usize },

    #[error("stage {stage} multiplier d = {value} is not positive")]
    NonPositiveD { stage: usize, value: f64 },

    #[error("cannot eliminate G(v_{term}) from stage {stage}: multiplier of stage {} is zero", .term + 1)]
    NotEliminable { stage: usize, term: usize },

    #[error("matrix is not symmetric (|m[{i}][{j}] - m[{j}][{i}]| = {gap:e})")]
    NotSymmetric { i: usize, j: usize, gap: f64 },

    #[error("smallest eigenvalue {lambda} of the energy discriminant is not positive; no energy step bound exists")]
    NonPositiveLambda { lambda: f64 },

    #[error("scheme is not maximum-bound preserving; no SSP step bound exists")]
    NotMbp,

    #[error("invalid tableau: {0}")]
    InvalidTableau(String),

    #[error("invalid Shu-Osher form: {0}")]
    InvalidForm(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{monitor} monitor violated at step {step} (value {value:e})")]
    BoundViolation {
        step: usize,
        monitor: Monitor,
        value: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown scheme {0:?} (not a preset and not a readable file)")]
    UnknownScheme(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
