use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("invalid state: {0}")]
    State(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("missing frame {index}: {} does not exist", path.display())]
    MissingFrame { index: u64, path: PathBuf },

    #[error("frame {index}: {source}")]
    AtFrame {
        index: u64,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::AtFrame { source, .. } => source.kind(),
            Error::NonFinite { .. } => ErrorKind::Numeric,
            Error::Io { .. } | Error::Format { .. } | Error::MissingFrame { .. } => ErrorKind::Io,
            Error::Dimension(_) | Error::InvalidParameter(_) | Error::State(_) => {
                ErrorKind::Validation
            }
        }
    }

    /// Tags an error with the frame it occurred on.
    pub fn at_frame(self, index: u64) -> Self {
        match self {
            e @ (Error::AtFrame { .. } | Error::MissingFrame { .. }) => e,
            e => Error::AtFrame {
                index,
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub(crate) fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

pub(crate) fn ensure_len(actual: usize, expected: usize, what: &str) -> Result<()> {
    if actual != expected {
        return Err(Error::Dimension(format!(
            "{what} has length {actual}, expected {expected}"
        )));
    }
    Ok(())
}
