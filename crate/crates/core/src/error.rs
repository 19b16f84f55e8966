use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates a declared constraint. The message names it.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Lévy density evaluated off its support.
    #[error("support error: {0}")]
    Support(String),
    /// The parameter combination is valid but no sampler handles it.
    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),
    #[error("circulant embedding failed: {0}")]
    Embedding(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("rejection sampler acceptance rate {rate:.3e} below 1e-3")]
    LowAcceptance { rate: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
