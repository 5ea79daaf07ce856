use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point, partition or parameter lies outside the space it is used with.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid cell: {0}")]
    InvalidCell(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The inputs fall outside the hypotheses of the result being checked;
    /// nothing was run.
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
    /// Something that must hold by construction did not.
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("unsupported size: {what} = {size} (limit {limit})")]
    UnsupportedSize {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("expression error: {0}")]
    Expr(String),
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
