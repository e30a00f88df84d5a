use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Core(#[from] contactkit::Error),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot write series: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid experiment parameter: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
