use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("need at least {required} values, got {got}")]
    InsufficientData { required: usize, got: usize },

    #[error("k must be ≤ n−1 and ≥ 1 (k = {k}, n = {n})")]
    KOutOfRange { k: usize, n: usize },

    #[error("non-positive threshold X_(n-k,n) = {0}; log-ratios undefined")]
    NonPositiveThreshold(f64),

    #[error("second-order auxiliary function unavailable for {0}")]
    AuxUnavailable(&'static str),

    #[error(
        "circulant embedding is not positive semi-definite for m = {m} \
         (min eigenvalue {min_eigenvalue:e}); use the dense Cholesky method instead"
    )]
    EmbeddingNotPsd { m: usize, min_eigenvalue: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("{failed} of {total} replications failed (ceiling is 10%)")]
    FailureCeiling { failed: usize, total: usize },

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
