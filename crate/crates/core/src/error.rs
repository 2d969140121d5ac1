use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A precondition on the arguments was not met.
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Input data has zero spread, so the requested statistic is undefined.
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("too few samples: need at least {required}, got {actual}")]
    TooFewSamples { required: usize, actual: usize },

    /// Reliability selection left no kept positions.
    #[error("no positions survived selection")]
    EmptySelection,

    /// The security or decoding targets cannot be met within the search caps.
    #[error("infeasible: {0}")]
    Infeasible(&'static str),
}
