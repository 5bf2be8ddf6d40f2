use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum QhError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("arc leaves the domain near {location}")]
    ArcExitsDomain { location: String },

    #[error("points are not connected inside the domain: {0}")]
    NotConnected(String),

    #[error("interior sampling exhausted: {accepted} accepted out of {trials} trials")]
    SamplingExhausted { accepted: usize, trials: usize },

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    /// The value is finite in exact arithmetic but exceeds `f64`; `ln_value`
    /// carries its natural logarithm.
    #[error("value overflows f64 (natural log = {ln_value})")]
    Overflow { ln_value: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = QhError> = std::result::Result<T, E>;

impl QhError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        QhError::InvalidInput(msg.into())
    }
}
