use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{what} is too large for exhaustive enumeration ({size} > cap {cap})")]
    TooLarge {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("parity system is inconsistent (no solutions)")]
    Inconsistent,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parity row {row} has length {len}, exceeding the encoding cap {cap}")]
    RowTooLong { row: usize, len: usize, cap: usize },

    #[error("LP solver failed numerically: {0}")]
    Numerical(String),

    #[error("query (level {level}, trial {trial}) was not solved to optimality: {status}")]
    NotClosed {
        level: usize,
        trial: usize,
        status: String,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
