use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GainRecord, TransferError};
use crate::embed_io::TaskEmbeddings;
use crate::measures::{measure_suite, MeasureError, MeasureName, MeasureOptions, MeasureReport};
use crate::stats::{ols_fit, predict_with_band, spearman_with, CorrelationResult, RegressionFit, DEFAULT_CONFIDENCE};

/// IIMM at or above this gets the "dense embeddings" note.
pub const IIMM_HIGH_NOTE_AT: f64 = 0.9;
/// IIMM at or below this gets the "already uniform" note.
pub const IIMM_LOW_NOTE_AT: f64 = 0.1;

/// Quantity regressed on (or correlated with) a measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    GainOverZse,
    /// In-domain fine-tuned accuracy.
    Accuracy,
    AvgOodDelta,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::GainOverZse => "gain_over_zse",
            Target::Accuracy => "accuracy",
            Target::AvgOodDelta => "avg_ood_delta",
        }
    }

    pub fn value(self, g: &GainRecord) -> Option<f64> {
        match self {
            Target::GainOverZse => Some(g.gain_over_zse),
            Target::Accuracy => Some(g.finetuned_acc),
            Target::AvgOodDelta => g.avg_ood_delta,
        }
    }
}

impl FromStr for Target {
    type Err = TransferError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gain_over_zse" => Ok(Target::GainOverZse),
            "accuracy" => Ok(Target::Accuracy),
            "avg_ood_delta" => Ok(Target::AvgOodDelta),
            other => Err(TransferError::UnknownTarget(other.to_string())),
        }
    }
}

/// One joined (model, task) observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub model_id: String,
    pub task: String,
    pub x: f64,
    pub y: f64,
}

type Key = (String, String);

/// Inner join of measure reports and gain records on (model, task).
/// Returns points in (model, task) order plus warnings about anything dropped.
pub fn joined_points(
    measures: &[MeasureReport],
    gains: &[GainRecord],
    measure_name: &str,
    target: Target,
) -> (Vec<FitPoint>, Vec<String>) {
    let mut warnings = Vec::new();
    let by_key: BTreeMap<Key, &MeasureReport> =
        measures.iter().map(|r| ((r.model_id.clone(), r.task_id.clone()), r)).collect();
    let gain_keys: BTreeSet<Key> = gains.iter().map(|g| (g.model_id.clone(), g.task.clone())).collect();

    for (model, task) in by_key.keys() {
        if !gain_keys.contains(&(model.clone(), task.clone())) {
            warnings.push(format!("measures for model {model}, task {task} have no outcome records"));
        }
    }

    let mut sorted: Vec<&GainRecord> = gains.iter().collect();
    sorted.sort_by(|a, b| (&a.model_id, &a.task).cmp(&(&b.model_id, &b.task)));
    let mut points = Vec::new();
    for g in sorted {
        let Some(report) = by_key.get(&(g.model_id.clone(), g.task.clone())) else {
            warnings.push(format!("outcomes for model {}, task {} have no measures", g.model_id, g.task));
            continue;
        };
        let Some(x) = report.get(measure_name) else {
            warnings.push(format!("model {}, task {}: measure {measure_name} is missing", g.model_id, g.task));
            continue;
        };
        let Some(y) = target.value(g) else {
            warnings.push(format!(
                "model {}, task {}: {} is undefined (no out-of-domain records)",
                g.model_id,
                g.task,
                target.as_str()
            ));
            continue;
        };
        points.push(FitPoint { model_id: g.model_id.clone(), task: g.task.clone(), x, y });
    }
    (points, warnings)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub confidence_level: f64,
    /// Drop observations whose measure exceeds this before fitting.
    pub x_threshold: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { confidence_level: DEFAULT_CONFIDENCE, x_threshold: None }
    }
}

/// A fitted predictor with the data and diagnostics behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFit {
    pub fit: RegressionFit,
    pub points: Vec<FitPoint>,
    pub residuals: Vec<f64>,
    pub warnings: Vec<String>,
}

/// OLS of `target` on the named measure over tasks present in both inputs.
pub fn fit_transfer_model(
    measures: &[MeasureReport],
    gains: &[GainRecord],
    measure_name: &str,
    target: Target,
    opts: &FitOptions,
) -> Result<TransferFit, TransferError> {
    let (mut points, mut warnings) = joined_points(measures, gains, measure_name, target);
    if let Some(limit) = opts.x_threshold {
        let before = points.len();
        points.retain(|p| p.x <= limit);
        if points.len() < before {
            warnings.push(format!(
                "{} task(s) above the {measure_name} threshold {limit} excluded from the fit",
                before - points.len()
            ));
        }
    }
    if points.len() < 3 {
        return Err(TransferError::InsufficientData(format!(
            "{} matched task(s) for {measure_name}; at least 3 are needed",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    let mut fit = ols_fit(&xs, &ys, opts.confidence_level)?;
    fit.measure_name = measure_name.to_string();
    fit.target = Some(target.as_str().to_string());
    fit.x_threshold = opts.x_threshold;

    let residuals: Vec<f64> = points.iter().map(|p| p.y - fit.line(p.x)).collect();
    let sd = fit.residual_variance.sqrt();
    if let Some((i, _)) = points.iter().enumerate().max_by(|a, b| a.1.x.total_cmp(&b.1.x)) {
        if sd > 0.0 && residuals[i] < -1.5 * sd {
            warnings.push(format!(
                "task {} has the largest {measure_name} and falls {:.2} residual sd below the line; \
                 the relationship may saturate in this region",
                points[i].task,
                -residuals[i] / sd
            ));
        }
    }
    Ok(TransferFit { fit, points, residuals, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferPrediction {
    pub task: String,
    pub model_id: String,
    pub measure_name: String,
    pub measure_value: f64,
    pub predicted_gain: f64,
    pub band: (f64, f64),
    pub extrapolation_flag: bool,
    pub notes: Vec<String>,
}

fn heuristic_notes(measure_name: &str, value: f64) -> Vec<String> {
    if measure_name != MeasureName::Iimm.as_str() {
        return Vec::new();
    }
    let mut notes = Vec::new();
    if value < 0.0 {
        notes.push(format!(
            "IIMM {value:.4} is negative; cosine similarities can be negative, so values below the nominal [0, 1] range are reported unclamped"
        ));
    }
    if value >= IIMM_HIGH_NOTE_AT {
        notes.push(format!(
            "IIMM {value:.4} is near 1: image and label embeddings are densely clustered, expect large gains from fine-tuning"
        ));
    } else if value <= IIMM_LOW_NOTE_AT {
        notes.push(format!(
            "IIMM {value:.4} is near 0: embeddings are already spread out, expect little gain from fine-tuning"
        ));
    }
    notes
}

/// Applies a fit to an already computed measure value.
pub fn predict_from_value(
    fit: &RegressionFit,
    task: &str,
    model_id: &str,
    value: f64,
) -> Result<TransferPrediction, TransferError> {
    let band = predict_with_band(fit, value)?;
    let mut notes = heuristic_notes(&fit.measure_name, value);
    if band.extrapolation {
        notes.push(format!(
            "extrapolation: {} = {value} is outside the fitted range [{}, {}]",
            fit.measure_name, fit.x_min, fit.x_max
        ));
    }
    Ok(TransferPrediction {
        task: task.to_string(),
        model_id: model_id.to_string(),
        measure_name: fit.measure_name.clone(),
        measure_value: value,
        predicted_gain: band.y_hat,
        band: (band.lower, band.upper),
        extrapolation_flag: band.extrapolation,
        notes,
    })
}

/// Computes the fit's measure on `t` and predicts the target with its band.
pub fn predict_transfer(
    fit: &RegressionFit,
    t: &TaskEmbeddings,
    opts: &MeasureOptions,
) -> Result<TransferPrediction, TransferError> {
    let name: MeasureName = fit.measure_name.parse()?;
    let report = measure_suite(t, &[name], opts)?;
    let value = match report.get(name.as_str()) {
        Some(v) => v,
        None => {
            let msg =
                report.errors().first().map(|(_, m)| m.to_string()).unwrap_or_else(|| "measure not computed".into());
            return Err(TransferError::Measure(MeasureError::InsufficientData(msg)));
        }
    };
    predict_from_value(fit, t.task_id(), t.model_id(), value)
}

/// One row of a correlation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub measure: String,
    pub result: Result<CorrelationResult, String>,
}

/// Spearman correlation of every measure present in the reports with `target`.
/// Failures are recorded per row.
pub fn correlate_all(
    measures: &[MeasureReport],
    gains: &[GainRecord],
    target: Target,
    exact_threshold: usize,
) -> (Vec<CorrelationRow>, Vec<String>) {
    let mut names: Vec<String> = Vec::new();
    for r in measures {
        for k in r.values.keys() {
            if !names.contains(k) {
                names.push(k.clone());
            }
        }
    }
    names.sort_by(|a, b| match (a.parse::<MeasureName>(), b.parse::<MeasureName>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    });

    let mut warnings = Vec::new();
    let rows = names
        .into_iter()
        .map(|name| {
            let (points, w) = joined_points(measures, gains, &name, target);
            for msg in w {
                if !warnings.contains(&msg) {
                    warnings.push(msg);
                }
            }
            let result = if points.len() < 3 {
                Err(format!("{} matched task(s); at least 3 are needed", points.len()))
            } else {
                let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
                let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
                spearman_with(&xs, &ys, exact_threshold).map_err(|e| e.to_string())
            };
            CorrelationRow { measure: name, result }
        })
        .collect();
    (rows, warnings)
}
