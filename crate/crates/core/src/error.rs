use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A size or cost guard refused the request.
    #[error("resource guard: {what} = {size} exceeds limit {limit}")]
    ResourceGuard {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("empty range: {0}")]
    EmptyRange(String),

    #[error("degenerate: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn require_finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        invalid(format!("{name} must be finite, got {v}"))
    }
}
