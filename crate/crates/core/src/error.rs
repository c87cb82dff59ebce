use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: u64 },

    #[error("window upper end {upper} at n = {n} exceeds the enumeration cap {cap}")]
    HorizonExceeded { n: u64, upper: u64, cap: u64 },

    #[error("closed-form count {certificate} disagrees with enumeration {enumerated} on [{lo}, {hi}]")]
    CertificateMismatch { lo: u64, hi: u64, certificate: u64, enumerated: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("vertex enumeration in dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid witness: {0}")]
    InvalidWitness(String),

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
