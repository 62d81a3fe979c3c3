use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("cannot place {s} frequencies with separation 1/{n}")]
    InfeasibleSeparation { n: usize, s: usize },

    #[error("frequency sampling exceeded {attempts} attempts (n={n}, s={s})")]
    SamplingBudgetExceeded { n: usize, s: usize, attempts: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("solver diverged at iteration {iter}: {reason}")]
    Diverged { iter: usize, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
