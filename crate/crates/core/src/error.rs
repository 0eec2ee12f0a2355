use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. The variants map onto the CLI exit-code
/// contract: `Config` and `Domain` are usage errors (exit 2), `Numeric`
/// is a runtime numerical failure (exit 3).
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to converge or became unstable.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Invalid configuration, schema violation, or malformed input file.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
