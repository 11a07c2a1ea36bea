use thiserror::Error;

pub type Result<T, E = GaitError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GaitError {
    /// Input text could not be parsed (bad header, unreadable number, bad JSON).
    #[error("parse error: {0}")]
    Parse(String),

    /// Input parsed but violates a data invariant (non-finite angle, duplicate id, ...).
    #[error("data error: {0}")]
    Data(String),

    /// Caller supplied an argument outside the operation's domain.
    #[error("argument error: {0}")]
    Argument(String),

    /// The computation is mathematically undefined for this input
    /// (zero covariance, zero healthy spread, all-tied ranks).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl GaitError {
    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        GaitError::Parse(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        GaitError::Data(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        GaitError::Argument(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        GaitError::Degenerate(msg.into())
    }

    /// Short machine-readable tag, used by the HTTP layer and CLI exit codes.
    pub fn kind(&self) -> &'static str {
        match self {
            GaitError::Parse(_) => "parse_error",
            GaitError::Data(_) => "data_error",
            GaitError::Argument(_) => "argument_error",
            GaitError::Degenerate(_) => "degenerate_error",
            GaitError::Io(_) => "io_error",
        }
    }
}

impl From<csv::Error> for GaitError {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => GaitError::Io(std::io::Error::other(e.to_string())),
            _ => GaitError::Parse(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for GaitError {
    fn from(e: serde_json::Error) -> Self {
        GaitError::Parse(e.to_string())
    }
}
