use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: row {row}, column {column}: {message}")]
    BadCell {
        path: PathBuf,
        /// 1-based line number in the file (the header is line 1).
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: {message}")]
    BadHeader { path: PathBuf, message: String },

    #[error("{path}: {message}")]
    BadDates { path: PathBuf, message: String },

    #[error("need at least {needed} rows, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("series of length {len} has no trainable row for window size {window}")]
    InsufficientHistory { len: usize, window: usize },

    #[error("normal equations are singular")]
    Singular,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
