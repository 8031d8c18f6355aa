use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spline space: {0}")]
    InvalidSpace(String),

    #[error("evaluation point out of range: {0}")]
    OutOfRange(String),

    #[error("coefficient vector has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
