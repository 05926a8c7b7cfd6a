use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: malformed row: {reason}")]
    MalformedRow { path: PathBuf, line: usize, reason: String },

    #[error("{path}: gap inside day {day}: {reason}")]
    GapInsideDay {
        path: PathBuf,
        day: chrono::NaiveDate,
        reason: String,
    },

    #[error("{path}: unit header mismatch: expected one of {expected:?}, found {found:?}")]
    UnitMismatch {
        path: PathBuf,
        expected: Vec<&'static str>,
        found: Option<String>,
    },

    #[error("{path}:{line}: capacity factor out of range: {value}")]
    CapacityFactorOutOfRange { path: PathBuf, line: usize, value: f64 },

    #[error("catalog record `{record}`: missing field `{field}`")]
    MissingField { record: String, field: &'static str },

    #[error("catalog record `{record}`: field `{field}` {reason}")]
    InvalidField {
        record: String,
        field: String,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("scenario synthesis: {0}")]
    Scenario(String),

    #[error("model build ({stage}): {reason}")]
    Build { stage: &'static str, reason: String },

    #[error("solver: {0}")]
    Solver(String),

    #[error("objective audit failure: recomputed {recomputed} vs solver {solver}; {deltas}")]
    AuditMismatch {
        recomputed: f64,
        solver: f64,
        deltas: String,
    },

    #[error("mps: line {line}: {reason}")]
    Mps { line: usize, reason: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
