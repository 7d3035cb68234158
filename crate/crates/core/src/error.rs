use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("input outside the loss domain: {0}")]
    Domain(String),

    #[error("{0}")]
    Undefined(String),

    #[error("instance exceeds the exact solver limits: {0}")]
    ScaleGuard(String),

    #[error("sample size n = {n} is below the admissible minimum n0 = {n0}")]
    SmallSample { n: f64, n0: f64 },

    #[error("atom collision: {0}")]
    AtomCollision(String),

    #[error("fixed point could not be bracketed: {0}")]
    NoFixedPoint(String),

    #[error("insufficient points for a fit: need at least {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
