use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreenError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("point {0:?} is not on the domain boundary")]
    NotOnBoundary(Vec<f64>),

    #[error("boundary normal undefined at corner/edge point {0:?}")]
    Corner(Vec<f64>),

    #[error("kernel is singular at the requested arguments: {0}")]
    Singular(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integral does not converge: {0}")]
    Divergent(String),

    #[error("quadrature did not reach tolerance {target:e} within {evals} evaluations (estimate {achieved:e})")]
    QuadratureFailure {
        target: f64,
        achieved: f64,
        evals: usize,
    },

    #[error("walk exceeded {0} steps without leaving the domain")]
    MaxStepsExceeded(usize),

    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

pub type Result<T> = std::result::Result<T, GreenError>;
