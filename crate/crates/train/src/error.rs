use std::path::PathBuf;

use goalcoach_core::backend::BackendKind;
use goalcoach_core::{BackendError, CoreError};
use goalcoach_corpus::CorpusError;
use goalcoach_eval::EvalError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("{kind}: need at least {need} training examples, have {have}")]
    DataTooSmall { kind: BackendKind, have: usize, need: usize },

    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("artifact {}: {reason}", path.display())]
    Artifact { path: PathBuf, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Corpus(CorpusError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Backend(#[from] BackendError),
}

impl From<CorpusError> for TrainError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Schema { .. } | CorpusError::Invalid(_) => TrainError::Schema(e.to_string()),
            other => TrainError::Corpus(other),
        }
    }
}

impl TrainError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TrainError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn artifact(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        TrainError::Artifact {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn too_small(kind: BackendKind, have: usize, need: usize) -> Self {
        TrainError::DataTooSmall { kind, have, need }
    }
}

pub type Result<T, E = TrainError> = std::result::Result<T, E>;
