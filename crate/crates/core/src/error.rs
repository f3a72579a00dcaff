use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },
    #[error("label column must hold exactly two classes, found {0}")]
    ClassCount(usize),
    #[error("dataset is empty")]
    Empty,
    #[error("label column {0} not found")]
    LabelColumn(String),
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("row has {found} features, model expects {expected}")]
    ColumnMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed expression: {0}")]
    Expression(String),
    #[error("invalid sample set: {0}")]
    Samples(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// True for failures caused by the input data rather than the program.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::ClassCount(_)
                | Error::Empty
                | Error::LabelColumn(_)
                | Error::InvalidData(_)
                | Error::ColumnMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
