use thiserror::Error;

/// Errors produced by log parsing, validation, and the anonymization toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed XML in the input stream.
    #[error("XML parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Structurally valid XML that violates the event log model.
    #[error("schema error: {0}")]
    Schema(String),

    /// A categorical value outside the attribute's declared domain.
    #[error("unknown category {value:?} for attribute {attribute:?}")]
    UnknownCategory { attribute: String, value: String },

    /// No timestamp deltas to resample from (log of single-event traces).
    #[error("no inter-event durations available to resample from")]
    EmptyDistributions,

    /// An attribute with no observed values anywhere in the log.
    #[error("attribute {0:?} has no values in the log")]
    NoValues(String),

    /// Operation requires a nonempty log.
    #[error("event log is empty")]
    EmptyLog,

    /// Invalid configuration or mechanism parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
