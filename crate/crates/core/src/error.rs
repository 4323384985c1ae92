use thiserror::Error;

/// Errors produced by tensor-train construction, kernels and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TtError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size limit exceeded: {what} has {size} entries, cap is {cap}")]
    SizeLimit { what: &'static str, size: usize, cap: usize },

    #[error("local problem of dimension {dim} cannot hold {states} states (rank cap too small)")]
    LocalDimension { dim: usize, states: usize },

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error("dense linear algebra failure: {0}")]
    Linalg(String),

    #[error("iterative local solver did not converge: residual {residual:e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },
}

pub type Result<T> = std::result::Result<T, TtError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(TtError::InvalidArgument(msg.into()))
}
