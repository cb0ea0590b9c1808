use thiserror::Error;

/// Errors raised by construction, tracing and persistence.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("transversality failure: {0}")]
    Transversality(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("malformed grid file: {0}")]
    Malformed(String),
    #[error("unsupported grid file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("grid file checksum mismatch")]
    Checksum,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether this error reflects bad input or a violated precondition rather
    /// than a failure of the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Invalid(_)
                | Error::Transversality(_)
                | Error::Malformed(_)
                | Error::Version { .. }
                | Error::Checksum
                | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
