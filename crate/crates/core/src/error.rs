use thiserror::Error;

/// Errors raised by the library.
///
/// `Domain` covers violated preconditions (bad dimension, out-of-range
/// argument, malformed input). `Numerical` covers algorithms that ran but
/// could not reach their contract (stalls, non-finite values, rank loss).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for errors caused by invalid input rather than numerical breakdown.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Parse(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_)
        )
    }
}
