use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid hyperparameters, shapes, or architecture settings.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input data violates a precondition (empty, un-normalized, unlabeled...).
    #[error("invalid input: {0}")]
    Input(String),

    /// A metric is mathematically undefined for the given input.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// A CSV cell could not be ingested.
    #[error("{path}: row {row}, column {column}: {message}")]
    Ingest {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    /// Broken internal invariant (mismatched vector lengths and the like).
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
