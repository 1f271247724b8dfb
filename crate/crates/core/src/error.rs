use thiserror::Error;

use crate::domain::QuestionId;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("item index {index} outside domain of {size} items")]
    ItemOutOfDomain { index: usize, size: usize },
    #[error("unknown item name `{0}`")]
    UnknownItem(String),
    #[error("question {0} already asked in this history")]
    DuplicateQuestion(QuestionId),
    #[error("inconsistent transcript: no item agrees with every recorded answer")]
    InconsistentTranscript,
    #[error("history is not terminal: {0} items still consistent")]
    NotTerminal(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("question generator made no progress at a set of {size} items after {attempts} attempts")]
    NoProgress { size: usize, attempts: u32 },
    #[error("game tree exceeds node budget of {0}")]
    NodeBudget(usize),
    #[error("enumeration exceeds budget of {0}")]
    EnumerationBudget(usize),
    #[error("empty item set")]
    EmptySet,
    #[error("cache consistency breach: {0}")]
    CacheConflict(String),
    #[error("play did not terminate within {0} questions")]
    NonTermination(usize),
    #[error("item cannot be isolated with the given question pool")]
    NotIsolable,
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("llm transport failure: {0}")]
    Transport(String),
    #[error("llm output could not be used after {attempts} attempts: {reason}")]
    RetryExhausted { attempts: u32, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
