use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Input rejections raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("duplicate observation for heuristic `{heuristic}` at node `{node}`")]
    DuplicateObservation { heuristic: String, node: String },

    #[error("unknown heuristic `{0}`")]
    UnknownHeuristic(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("invalid observation for heuristic `{heuristic}` at node `{node}`: {message}")]
    InvalidObservation {
        heuristic: String,
        node: String,
        message: String,
    },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("dataset is empty: {0}")]
    EmptyDataset(&'static str),

    #[error("limit exceeded: {limit} is {actual}, allowed {allowed}")]
    LimitExceeded {
        limit: &'static str,
        actual: u128,
        allowed: u128,
    },

    #[error("invalid model input: {0}")]
    Model(String),

    #[error("missing variable `{0}` in assignment")]
    MissingVariable(String),

    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),

    #[error("time limit must be positive, got {0}")]
    InvalidTimeLimit(f64),

    #[error("invalid simulator config: {0}")]
    InvalidConfig(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("{0}")]
    Invalid(String),
}
