use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("invalid data: {0}")]
    Data(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("degenerate response: {0}")]
    DegenerateResponse(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}
