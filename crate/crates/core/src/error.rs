use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid has too many entries to address ({0:?})")]
    GridOverflow(Vec<usize>),

    #[error("index {index:?} out of range for shape {shape:?}")]
    IndexOutOfRange { index: Vec<usize>, shape: Vec<usize> },

    #[error("point {point:?} lies outside the search bounds")]
    OutOfBounds { point: Vec<f64> },

    #[error("matrix is not positive definite (last jitter tried: {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },

    #[error("grid exhausted: every entry has already been observed")]
    GridExhausted,

    #[error("tensor with {entries} entries exceeds the enumeration cap of {cap}")]
    TooLarge { entries: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("objective failed: {0}")]
    Objective(String),

    #[error("unknown benchmark function `{0}`")]
    UnknownBenchmark(String),

    #[error("profile matrix is empty")]
    EmptyProfile,

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
