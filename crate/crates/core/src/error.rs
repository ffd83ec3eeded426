//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the solver, the diagnostics and the IO layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("argument {value} outside the admissible domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("input must have zero mean, mass defect is {mean:e}")]
    NonZeroMean { mean: f64 },

    #[error("refused: {0}")]
    Refused(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("Newton failure at t = {t}, dt = {dt:e}: {reason} (iterations {iterations}, residual {residual:e})")]
    Newton {
        t: f64,
        dt: f64,
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_) | Error::Singular(_) | Error::NotConverged { .. } | Error::Newton { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
