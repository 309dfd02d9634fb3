use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("integrand is not finite at quadrature node {index} (x = {x})")]
    NonFiniteIntegrand { index: usize, x: f64 },

    #[error("kernel matrix entry ({row}, {col}) is not finite")]
    NonFiniteKernel { row: usize, col: usize },

    #[error("factorization failed after jitter escalation up to {max_jitter:e}")]
    Factorization { max_jitter: f64 },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("operation not supported for this measure: {0}")]
    UnsupportedMeasure(&'static str),

    #[error("mode {mode} is not available (basis has {max_mode} modes)")]
    ModeOutOfRange { mode: usize, max_mode: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shell scheduling: {0}")]
    Schedule(String),

    #[error("weight function mean is {mean} (expected 1 within {tol:e})")]
    WeightNormalization { mean: f64, tol: f64 },

    #[error("missing cumulant entry {0:?}")]
    MissingCumulant([usize; 4]),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("perturbative breakdown: {0}")]
    PerturbativeBreakdown(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
