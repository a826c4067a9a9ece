use thiserror::Error;

/// Errors raised by the echo library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("site {site} is outside the chain (1..={size})")]
    SiteOutOfRange { site: i64, size: usize },

    #[error("operation requires a finite chain")]
    InfiniteChain,

    #[error("usage error: {0}")]
    Usage(String),

    #[error("not available analytically: {0}")]
    Unsupported(String),

    #[error("dense reference limited to {max} sites, got {sites}")]
    TooLarge { sites: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time {t} is not a common multiple of the kick periods {tau1} and {tau2}")]
    NonCommensurate { t: f64, tau1: f64, tau2: f64 },

    #[error("QDP events are not time ordered")]
    UnorderedEvents,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
