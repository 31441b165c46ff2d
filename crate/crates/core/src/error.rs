use thiserror::Error;

/// Errors raised by the analysis engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed model, unknown variable, violated precondition.
    #[error("invalid input: {0}")]
    Input(String),
    /// An enumeration would exceed a configured size cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// A query is undefined for the given distribution (e.g. conditioning on a null event).
    #[error("domain error: {0}")]
    Domain(String),
    /// A linear solve hit a singular or ill-conditioned system.
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
