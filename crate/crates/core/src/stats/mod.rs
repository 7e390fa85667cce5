//! Rank correlation and simple linear regression with inference.

mod error;
mod rank;
mod regression;
mod special;

pub use error::StatsError;
pub use rank::{
    rank_with_ties, spearman, spearman_with, CorrelationMethod, CorrelationResult, DEFAULT_EXACT_THRESHOLD,
    MAX_EXACT_THRESHOLD,
};
pub use regression::{ols_fit, predict_with_band, BandPrediction, RegressionFit, DEFAULT_CONFIDENCE};
pub use special::{ln_gamma, regularized_incomplete_beta, t_distribution_sf, t_quantile};
