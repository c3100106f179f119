use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected n={expected}, found n={found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("variable {index} out of range for n={n}")]
    VariableOutOfRange { index: usize, n: usize },

    #[error("operation requires a nonempty variable set")]
    EmptySet,

    #[error("set is not a subset of the ordering's domain")]
    NotSubset,

    #[error("invalid ordering: {0}")]
    InvalidOrdering(String),

    #[error("step {t} out of range 0..={len}")]
    StepOutOfRange { t: usize, len: usize },

    #[error("malformed function spec: {0}")]
    MalformedSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("query budget exhausted")]
    BudgetExhausted,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
