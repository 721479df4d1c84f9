use mmwave_ilp::IlpError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("unknown site index {0}")]
    UnknownSite(usize),
    #[error("unknown grid index {0}")]
    UnknownGrid(usize),
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid radio parameters: {0}")]
    InvalidRadio(String),
    #[error("scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("outage tolerance unreachable for grids {grids:?}")]
    Uncoverable { grids: Vec<usize> },
    #[error("solver: {0}")]
    Ilp(#[from] IlpError),
}

pub type Result<T> = std::result::Result<T, CoreError>;
