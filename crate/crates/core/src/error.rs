use thiserror::Error;

use crate::dataset_io::{CaptionServiceError, LoadError, MixError};
use crate::eval::EvalError;
use crate::position_token::QuantizationError;
use crate::position_token::{CodecError, IntervalError};
use crate::templates::TemplateError;

/// Errors raised while composing samples or rendering records.
#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("source pool has {available} items but {required} are needed")]
    PoolTooSmall { available: usize, required: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

/// A generated record that does not read back the way it was built.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("record {record_id}: {message}")]
pub struct InvariantViolation {
    pub record_id: String,
    pub message: String,
}

impl InvariantViolation {
    pub fn new(record_id: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            record_id: record_id.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Quantization(#[from] QuantizationError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Invariant(#[from] InvariantViolation),
    #[error(transparent)]
    Mix(#[from] MixError),
    #[error(transparent)]
    CaptionService(#[from] CaptionServiceError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
