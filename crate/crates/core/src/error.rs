//! Error type shared across the crate.
//!
//! Tensor ops panic on shape misuse (programmer error, like `ndarray`);
//! everything that touches files, configs or user input returns [`Error`].

use std::fmt;

#[derive(Debug)]
pub enum Error {
    /// Incompatible shapes or extents at a public boundary.
    Dimension(String),
    /// A configuration invariant was violated; the message names the field.
    Config(String),
    /// Malformed file contents. `offset` is the byte position when known,
    /// `field` the record field being read.
    Parse {
        what: String,
        offset: Option<u64>,
        field: Option<&'static str>,
    },
    /// File encoding we deliberately do not handle.
    UnsupportedFormat(String),
    /// Audio clip shorter than one analysis window.
    TooShort { samples: usize, needed: usize },
    /// Caller misuse of an API contract (bad labels, empty batch, ...).
    Usage(String),
    /// A verification oracle could not produce an answer.
    Oracle(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(msg) => write!(f, "dimension error: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Parse {
                what,
                offset,
                field,
            } => {
                write!(f, "parse error: {what}")?;
                if let Some(field) = field {
                    write!(f, " (field `{field}`)")?;
                }
                if let Some(offset) = offset {
                    write!(f, " at byte offset {offset}")?;
                }
                Ok(())
            }
            Error::UnsupportedFormat(msg) => write!(f, "unsupported format: {msg}"),
            Error::TooShort { samples, needed } => write!(
                f,
                "audio too short: {samples} samples, need at least {needed}"
            ),
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::Oracle(msg) => write!(f, "oracle error: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
