use thiserror::Error;

/// Errors raised by parsing and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: field `{field}`: {message}")]
    Parse {
        line: u64,
        field: String,
        message: String,
    },

    #[error("line {line}: unparseable timestamp `{value}`")]
    Timestamp { line: u64, value: String },

    #[error("line {line}: duplicate label for address {address}")]
    DuplicateLabel { line: u64, address: String },

    #[error("invalid time window: start {start} is not before end {end}")]
    InvalidWindow { start: String, end: String },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        reason: &'static str,
    },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("ranked list contains duplicate item at position {0}")]
    DuplicateInList(usize),

    #[error("nodes do not form a strongly connected component")]
    NotStronglyConnected,

    #[error("unknown group `{query}`; nearest matches: {suggestions:?}")]
    UnknownGroup {
        query: String,
        suggestions: Vec<String>,
    },

    #[error("malformed network dump: {0}")]
    Dump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, value: impl ToString, reason: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        value: value.to_string(),
        reason,
    }
}
