use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the prediction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length {len} is not a power of two")]
    NotPowerOfTwo { len: usize },

    #[error("coarsest level j0={j0} must be below the finest level J={levels}")]
    Level { j0: usize, levels: usize },

    #[error("malformed pyramid: {0}")]
    Structure(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("insufficient history: need at least {needed} segments, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("truth value is zero at index {index}; relative error undefined")]
    ZeroTruth { index: usize },

    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
