use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid parameters or configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The sequence admits no witness pair, so no divergent selection can be built.
    #[error("not constructible: {0}")]
    NotConstructible(String),

    /// A witness subsequence ran out of indices before a block was complete.
    #[error("witness exhausted: {0}")]
    WitnessExhausted(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
