use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed binary input, with the byte offset where parsing stopped.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Feature names do not match what a model or stats record expects.
    #[error("schema mismatch: missing [{}], extra [{}]", missing.join(", "), extra.join(", "))]
    Schema { missing: Vec<String>, extra: Vec<String> },

    /// Training data only contains one class where two are required.
    #[error("single-class dataset: {0}")]
    SingleClass(String),

    /// Content that parsed syntactically but is semantically invalid.
    #[error("data error: {0}")]
    Data(String),

    #[error("objective returned non-finite value {value} at position {position:?}")]
    NonFinite { position: Vec<f64>, value: f64 },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
