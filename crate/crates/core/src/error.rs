use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or unsupported numerical configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("no velocity is transmitted by the selector geometry")]
    EmptyBand,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("oracle failure: {0}")]
    OracleFailure(String),

    /// Malformed or unreadable scan file.
    #[error("scan file: {0}")]
    Format(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn insufficient<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InsufficientData(msg.into()))
}
