use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::pipeline::TimingReport;

pub type Result<T, E = OppError> = std::result::Result<T, E>;

/// A malformed byte stream, located by offset.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{message} at byte offset {offset}")]
pub struct FormatError {
    pub offset: u64,
    pub message: String,
}

impl FormatError {
    pub(crate) fn new(offset: usize, message: impl Into<String>) -> Self {
        FormatError {
            offset: offset as u64,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum OppError {
    #[error(transparent)]
    Core(#[from] pmt_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: FormatError },
    #[error("frame source: {0}")]
    Source(String),
    #[error("frame source exhausted after {completed} of {requested} frames")]
    Exhausted {
        completed: u64,
        requested: u64,
        report: Box<TimingReport>,
    },
}

impl OppError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        OppError::Io {
            path: path.into(),
            source,
        }
    }
}
