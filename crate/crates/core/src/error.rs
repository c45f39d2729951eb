use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Input grid or frame has the wrong shape or content.
    InvalidInput(String),
    /// A parameter invariant was violated.
    InvalidParams(String),
    /// Correlation surface is flat; nothing to match.
    NoMatch,
    /// Resampling by the recovered scale left nothing of the image.
    InvalidScale(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::NoMatch => f.write_str("no match: correlation surface is flat"),
            Error::InvalidScale(msg) => write!(f, "invalid scale: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
