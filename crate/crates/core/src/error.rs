use thiserror::Error;

use crate::conllu::Mismatch;
use crate::tree::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed parse: {0}")]
    Structure(Violation),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("inputs are not aligned: {0}")]
    Alignment(Mismatch),

    #[error("{0}")]
    InvalidInput(String),

    #[error("{metric} is undefined: {reason}")]
    Undefined {
        metric: &'static str,
        reason: String,
    },

    #[error("size guard: {0}")]
    Guard(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        Error::Structure(v)
    }
}

impl From<Mismatch> for Error {
    fn from(m: Mismatch) -> Self {
        Error::Alignment(m)
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
