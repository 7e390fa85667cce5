use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("singular bandwidth: {0}")]
    SingularBandwidth(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("unknown measure name {0:?}")]
    UnknownMeasure(String),
    #[error("empty measure selection")]
    EmptySelection,
    #[error("measures table: {0}")]
    Table(String),
}
