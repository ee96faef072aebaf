use thiserror::Error;

/// Errors produced by the numerical toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid subsystem index {index} for a state with {count} subsystems")]
    InvalidSubsystem { index: usize, count: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("total dimension {dim} exceeds the supported maximum of {max}")]
    TooLarge { dim: usize, max: usize },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("channel `{0}` is not teleportation-covariant")]
    NotCovariant(String),

    #[error("Kraus operators are not complete (deviation {0:e})")]
    IncompleteKraus(f64),

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("cannot parse `{token}`: {reason}")]
    Parse { token: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
