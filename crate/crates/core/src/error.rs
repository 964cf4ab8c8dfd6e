use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = HedgeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HedgeError {
    #[error("invalid case `{id}`: {reason}")]
    InvalidCase { id: String, reason: String },

    #[error("empty response pool")]
    EmptyPool,

    #[error("judge unavailable: {0}")]
    JudgeUnavailable(String),

    #[error("bridge protocol error: {0}")]
    Protocol(String),

    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("ROC-AUC undefined: labels contain a single class")]
    DegenerateLabels,

    #[error("case `{case_id}` has {have} samples per pool, {need} required")]
    InsufficientSamples { case_id: String, need: usize, have: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl HedgeError {
    pub(crate) fn invalid_case(id: impl Into<String>, reason: impl Into<String>) -> Self {
        HedgeError::InvalidCase {
            id: id.into(),
            reason: reason.into(),
        }
    }
}
