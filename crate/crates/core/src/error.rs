use thiserror::Error;

/// Errors raised by the numerical and arithmetic routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} = {value} is out of range (limit {limit})")]
    OutOfRange { what: &'static str, value: u64, limit: u64 },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("numerical failure: {message} (achieved error estimate {achieved_error:e})")]
    NumericalFailure { message: String, achieved_error: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::ResourceLimit(msg.into())
    }

    /// True for errors that stem from a configured budget or memory cap.
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::ResourceLimit(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
