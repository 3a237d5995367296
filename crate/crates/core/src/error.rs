use thiserror::Error;

/// Errors raised by channel construction, analysis, and search.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is out of range or has the wrong shape.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An object failed its structural invariants (trace preservation,
    /// positivity, unitarity, ...).
    #[error("validation failed: {0}")]
    Validation(String),

    /// A factorization did not converge, or a constructed witness missed its
    /// residual target.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The operation's hypotheses do not hold for this input.
    #[error("refused: {0}")]
    Refusal(String),

    /// A file did not match the expected schema.
    #[error("format error at {path}: {message}")]
    Format { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
