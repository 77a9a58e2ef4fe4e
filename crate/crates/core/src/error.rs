use std::io;

/// Broad category of a failure, used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Caller supplied an invalid argument or parameter.
    Usage,
    /// Input data did not match its declared format.
    Format,
    /// Data was well-formed but inconsistent (IDs, counts, coverage).
    Integrity,
    /// I/O or other unexpected failure.
    Internal,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("record {record}: {msg}")]
    Record { record: usize, msg: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. } | Error::Record { .. } => ErrorClass::Format,
            Error::Integrity(_) => ErrorClass::Integrity,
            Error::Invalid(_) => ErrorClass::Usage,
            Error::Io(_) => ErrorClass::Internal,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn integrity(msg: impl Into<String>) -> Self {
        Error::Integrity(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn record(record: usize, msg: impl Into<String>) -> Self {
        Error::Record {
            record,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
