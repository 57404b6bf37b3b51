use thiserror::Error;

use crate::backend::BackendError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("unknown slot name `{0}`")]
    UnknownSlot(String),

    #[error("malformed belief state at byte {offset}: {reason}")]
    MalformedBelief { offset: usize, reason: String },

    #[error("invalid belief state: {0}")]
    InvalidBelief(String),

    #[error("invalid BIO sequence: {0}")]
    InvalidBio(String),

    #[error("codec error at byte {offset}: {reason}")]
    Codec { offset: usize, reason: String },

    #[error("invalid emotion distribution: {0}")]
    InvalidEmotion(String),

    #[error("emotion vocabulary: {0}")]
    Vocabulary(String),

    #[error("invalid gate configuration: {0}")]
    InvalidGate(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("session already closed")]
    AlreadyClosed,

    #[error("malformed assembled input: {0}")]
    MalformedInput(String),

    #[error("backend failure: {0}")]
    Backend(#[from] BackendError),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
