use thiserror::Error;

/// Errors raised across the library. The CLI maps each variant onto a
/// distinct exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    /// A raw composition exceeded the configured term budget.
    #[error("resource limit: {what} (partial: {partial})")]
    Resource { what: String, partial: String },

    /// The image lift is negligible relative to `|z|_inf^d`.
    #[error("indeterminacy proximity: relative image size {ratio:e}")]
    IndeterminacyProximity { ratio: f64 },

    #[error("statistical insufficiency: {0}")]
    Insufficient(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
