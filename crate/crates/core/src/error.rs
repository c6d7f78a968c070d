use thiserror::Error;

/// Errors raised across the toolkit.
///
/// The CLI maps [`Error::Config`] to exit code 3 and everything else to 2.
#[derive(Error, Debug)]
pub enum Error {
    /// An argument is outside the domain of a model function.
    #[error("domain error: {0}")]
    Domain(String),
    /// A scenario or configuration is internally inconsistent (e.g. unstable dt).
    #[error("configuration error: {0}")]
    Config(String),
    /// Input data is malformed, empty or cannot be aligned.
    #[error("input error: {0}")]
    Input(String),
    /// Not enough data to compute the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// Leak-decay calibration failed.
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
