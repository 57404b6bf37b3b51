use std::path::PathBuf;

use goalcoach_core::{BackendError, CoreError};
use goalcoach_corpus::CorpusError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("length mismatch: {left} candidates vs {right} references")]
    LengthMismatch { left: usize, right: usize },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("transcript does not line up with the gold corpus: {0}")]
    Alignment(String),

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Corpus(#[from] CorpusError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl EvalError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EvalError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;
