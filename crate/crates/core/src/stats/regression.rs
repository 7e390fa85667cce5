use serde::{Deserialize, Serialize};

use super::{t_distribution_sf, t_quantile, StatsError};

/// Confidence level for bands when none is given.
pub const DEFAULT_CONFIDENCE: f64 = 0.96;

/// Simple linear regression `y = intercept + slope * x` with inference.
///
/// `x_mean`, `x_ss` and `residual_variance` are kept so that the
/// mean-response band can be evaluated from a serialized fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub measure_name: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_p_value: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    pub n: usize,
    pub confidence_level: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub x_mean: f64,
    /// Sum of squared deviations of `x` from its mean.
    pub x_ss: f64,
    /// Residual variance with `n - 2` degrees of freedom.
    pub residual_variance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Upper bound applied to `x` before fitting, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_threshold: Option<f64>,
}

impl RegressionFit {
    pub fn line(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    pub fn in_domain(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPrediction {
    pub y_hat: f64,
    pub lower: f64,
    pub upper: f64,
    /// `x0` lies outside the range seen while fitting.
    pub extrapolation: bool,
}

/// Ordinary least squares of `y` on `x`. The slope p-value is two-sided.
pub fn ols_fit(x: &[f64], y: &[f64], confidence_level: f64) -> Result<RegressionFit, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::Data(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::InsufficientData(format!("regression needs n >= 3, got {n}")));
    }
    if !(confidence_level > 0.0 && confidence_level < 1.0) {
        return Err(StatsError::Parameter(format!("confidence level must be in (0, 1), got {confidence_level}")));
    }
    if let Some(i) = x.iter().chain(y).position(|v| !v.is_finite()) {
        return Err(StatsError::Data(format!("non-finite value at position {}", i % n)));
    }

    let nf = n as f64;
    let x_mean = x.iter().sum::<f64>() / nf;
    let y_mean = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - x_mean;
        let dy = b - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::DegenerateData("x is constant".into()));
    }
    if syy == 0.0 {
        return Err(StatsError::DegenerateResponse("y is constant, R² is undefined".into()));
    }

    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let r_squared = (1.0 - ss_res / syy).clamp(0.0, 1.0);
    let df = (n - 2) as u64;
    let residual_variance = ss_res / (n - 2) as f64;
    let slope_se = (residual_variance / sxx).sqrt();
    let intercept_se = (residual_variance * (1.0 / nf + x_mean * x_mean / sxx)).sqrt();
    let slope_p_value =
        if slope_se == 0.0 { 0.0 } else { (2.0 * t_distribution_sf((slope / slope_se).abs(), df)?).min(1.0) };

    let x_min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(RegressionFit {
        measure_name: String::new(),
        slope,
        intercept,
        r_squared,
        slope_p_value,
        slope_se,
        intercept_se,
        n,
        confidence_level,
        x_min,
        x_max,
        x_mean,
        x_ss: sxx,
        residual_variance,
        target: None,
        x_threshold: None,
    })
}

/// Point prediction with a confidence band for the mean response at `x0`.
pub fn predict_with_band(fit: &RegressionFit, x0: f64) -> Result<BandPrediction, StatsError> {
    if fit.n < 3 {
        return Err(StatsError::InsufficientData("fit has fewer than 3 points".into()));
    }
    let y_hat = fit.line(x0);
    let alpha = 1.0 - fit.confidence_level;
    let q = t_quantile(1.0 - alpha / 2.0, (fit.n - 2) as u64)?;
    let dx = x0 - fit.x_mean;
    let se = (fit.residual_variance * (1.0 / fit.n as f64 + dx * dx / fit.x_ss)).sqrt();
    Ok(BandPrediction { y_hat, lower: y_hat - q * se, upper: y_hat + q * se, extrapolation: !fit.in_domain(x0) })
}
