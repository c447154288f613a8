use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid vector: {0}")]
    InvalidVector(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("tuple too large: k = {k} exceeds n = {n}")]
    TupleTooLarge { k: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("k < 1: epsilon = {0} is too large for the hidden-direction family")]
    TooFewDirections(f64),

    #[error("epsilon out of supported range: {0}")]
    EpsilonOutOfRange(String),

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("empty query set")]
    EmptySet,

    #[error("oracle failed at iteration {iteration}: {source}")]
    Oracle {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed instance document: {0}")]
    Format(String),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
