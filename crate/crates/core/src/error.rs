use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rectangle: {0}")]
    InvalidRect(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("state vector has length {found}, network expects {expected}")]
    StateLength { expected: usize, found: usize },

    #[error("non-finite training loss {0}")]
    NonFiniteLoss(f64),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("query {query}: result of index `{index}` differs from baseline `{baseline}`")]
    ResultMismatch {
        query: usize,
        index: String,
        baseline: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
