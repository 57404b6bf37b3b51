use std::path::PathBuf;

use goalcoach_core::{BackendError, CoreError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}:{line}: {reason}", path.display())]
    Schema { path: PathBuf, line: usize, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("schema error: {0}")]
    Invalid(String),
}

impl CorpusError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn schema(path: impl Into<PathBuf>, line: usize, reason: impl Into<String>) -> Self {
        CorpusError::Schema {
            path: path.into(),
            line,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;
