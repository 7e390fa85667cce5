use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("format error: {0}")]
    Format(String),
    #[error("truncated payload: header declares {expected} bytes, found {actual}")]
    Truncation { expected: usize, actual: usize },
    #[error("unsupported dtype {0:?} (accepted: <f4, <f8, <i8)")]
    Dtype(String),
    #[error("row {row} has zero norm and cannot be normalized")]
    DegenerateRow { row: usize },
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("label error: {0}")]
    Label(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("row {row} has norm {norm}, outside tolerance {tolerance} of 1")]
    NotNormalized { row: usize, norm: f64, tolerance: f64 },
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl EmbedError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EmbedError::Io { path: path.into(), source }
    }
}
