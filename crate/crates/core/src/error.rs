use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a model formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("action index {index} out of range (valid: 0..{limit})")]
    InvalidAction { index: usize, limit: usize },

    #[error("episode already finished")]
    EpisodeDone,

    #[error("no decision is pending")]
    NoPendingDecision,

    #[error("a decision is pending; dispatch it before advancing")]
    DecisionPending,

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid weight file: {0}")]
    Weights(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
