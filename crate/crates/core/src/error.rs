use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty source sentence")]
    EmptySource,

    #[error("token id {id} out of range for vocabulary of size {size}")]
    IdOutOfRange { id: u32, size: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty candidate vocabulary")]
    EmptyCandidateVocabulary,

    #[error("gold token pruned: target id {0} not in active vocabulary")]
    GoldTokenPruned(u32),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("bad file format: {0}")]
    BadFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
