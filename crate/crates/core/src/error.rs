use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("input shape not handled here: {0}")]
    WrongShape(String),
    #[error("mean mismatch: {0}")]
    MeanMismatch(String),
    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("solver answer failed re-verification: {0}")]
    Verification(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
