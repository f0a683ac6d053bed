//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("entry {entry}: index {index} out of bounds for mode {mode} (dim {dim})")]
    OutOfBounds {
        mode: usize,
        entry: usize,
        index: u64,
        dim: u32,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("block size {0} must be a power of two no larger than 256")]
    InvalidBlockSize(u32),

    #[error("mode {mode} is compressed; the product mode must stay uncompressed")]
    CompressedProductMode { mode: usize },

    #[error("division by an absent or zero element at {coord:?}")]
    DivisionByZero { coord: Vec<u32> },

    #[error("dense tensor with {cells} cells exceeds the cap of {cap}")]
    DenseCapExceeded { cells: u128, cap: usize },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid generator spec: {0}")]
    Spec(String),

    #[error("degenerate histogram: {0}")]
    DegenerateHistogram(String),

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
