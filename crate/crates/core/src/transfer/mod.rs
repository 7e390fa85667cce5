//! From accuracy records to fitted gain predictors.

mod error;
mod model;
mod outcomes;
mod plot;

pub use error::TransferError;
pub use model::{
    correlate_all, fit_transfer_model, joined_points, predict_from_value, predict_transfer, CorrelationRow, FitOptions,
    FitPoint, Target, TransferFit, TransferPrediction, IIMM_HIGH_NOTE_AT, IIMM_LOW_NOTE_AT,
};
pub use outcomes::{
    build_gain_table, gain_over_zero_shot_error, read_outcomes_csv, write_outcomes_csv, GainRecord, OutcomeRecord,
};
pub use plot::{plot_data, write_plot_csv, BandRow, PlotData, ScatterRow, BAND_POINTS};
