use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported model format: {0}")]
    Format(String),
    #[error("corrupt model: {0}")]
    CorruptModel(String),
    /// The damped normal equations could not be factored even at the
    /// largest allowed damping.
    #[error("linear solve failed after exhausting damping")]
    SolveFailure,
    #[error("damping parameter exceeded its maximum")]
    LambdaOverflow,
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
}
