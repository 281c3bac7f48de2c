use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("invalid tag {0:?}: expected O, B-<type> or I-<type>")]
    InvalidTag(String),

    #[error("position {index} out of range for sequence of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("context is empty; the local factor is undefined")]
    UndefinedContext,

    #[error("corrupted word {0} equals the centre word; resample")]
    CorruptEqualsCentre(usize),

    #[error("window has {got} ids, expected {expected}")]
    Arity { expected: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite value in sentence {sentence}: {message}")]
    Numerical { sentence: usize, message: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("search space too small: could not draw {requested} distinct configurations (got {found})")]
    SearchSpaceTooSmall { requested: usize, found: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse failure category, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Parse,
    Protocol,
    Numerical,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse { .. } | Error::Format { .. } | Error::InvalidTag(_) | Error::Json(_) => {
                ErrorKind::Parse
            }
            Error::Protocol(_) | Error::SearchSpaceTooSmall { .. } => ErrorKind::Protocol,
            Error::Numerical { .. } => ErrorKind::Numerical,
            Error::Io(_) | Error::Csv(_) => ErrorKind::Io,
            _ => ErrorKind::Input,
        }
    }
}
