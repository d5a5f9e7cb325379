use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("non-finite input at index {index}")]
    NonFinite { index: usize },

    #[error("insufficient data: need at least {required} observations, got {got}")]
    InsufficientData { required: usize, got: usize },

    #[error("{what} did not converge (achieved tolerance {achieved:e})")]
    Convergence { what: &'static str, achieved: f64 },

    #[error("matrix is singular or ill-conditioned (condition number {condition:e})")]
    Singular { condition: f64 },

    #[error("too few usable bootstrap replicates: {got} < {required}")]
    TooFewReplicates { required: usize, got: usize },

    #[error("{failed} of {total} bootstrap replicates failed to converge (limit 5%)")]
    ReplicateFailures { failed: usize, total: usize },

    #[error("{excluded} of {total} Monte Carlo trajectories excluded (limit 5%)")]
    TooManyExclusions { excluded: usize, total: usize },

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
