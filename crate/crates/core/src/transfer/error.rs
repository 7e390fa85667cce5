use thiserror::Error;

use crate::measures::MeasureError;
use crate::stats::StatsError;

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("zero-shot accuracy is 1, so there is no zero-shot error to close")]
    PerfectZeroShot,
    #[error("out of range: {0}")]
    Range(String),
    #[error("duplicate record: {0}")]
    DuplicateRecord(String),
    #[error("missing record: {0}")]
    MissingRecord(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("outcomes table: {0}")]
    Table(String),
    #[error("unknown target {0:?} (expected gain_over_zse, accuracy or avg_ood_delta)")]
    UnknownTarget(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}
