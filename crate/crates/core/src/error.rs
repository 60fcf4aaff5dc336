use thiserror::Error;

/// Errors raised by the network, memory store and trainers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("partition count {count} is not a perfect power of dimension {dimension}")]
    NotPerfectPower { count: usize, dimension: usize },

    #[error("partition index {index} out of range 1..={count}")]
    PartitionOutOfRange { index: usize, count: usize },

    #[error("sample encodes to partition {actual}, not target partition {expected}")]
    PartitionMismatch { expected: usize, actual: usize },

    /// `1 - vᵀPv` fell below the positivity guard during a covariance downdate.
    #[error("covariance downdate would lose positive definiteness (1 - vᵀPv = {margin:e})")]
    DowndateSingular { margin: f64 },

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("trainer has no covariance matrix")]
    MissingCovariance,
}

pub type Result<T> = std::result::Result<T, Error>;
