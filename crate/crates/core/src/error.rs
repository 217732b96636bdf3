use thiserror::Error;

/// Errors raised by every stage of the moment pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric parameter violates a precondition.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("index {index} out of range (valid: 0..{len})")]
    Index { index: usize, len: usize },

    /// An input lies outside the domain on which the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// More angular orders were requested than the angular grid can resolve.
    #[error("angular order {max_angular} aliases on {n_angular} angular samples (need 2L+1 <= T)")]
    Aliasing { max_angular: usize, n_angular: usize },

    #[error("malformed PGM at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn format(offset: usize, reason: impl Into<String>) -> Self {
        Error::Format {
            offset,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
