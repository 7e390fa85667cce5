use std::io::Write;

use serde::Serialize;

use super::{FitPoint, TransferError};
use crate::stats::{predict_with_band, RegressionFit};

/// Band rows emitted across `[x_min, x_max]`.
pub const BAND_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterRow {
    pub task: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandRow {
    pub x: f64,
    pub y_hat: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotData {
    pub scatter: Vec<ScatterRow>,
    pub band: Vec<BandRow>,
}

/// Scatter of the observations plus the fitted line and its band sampled at
/// [`BAND_POINTS`] evenly spaced x values.
pub fn plot_data(fit: &RegressionFit, points: &[FitPoint]) -> Result<PlotData, TransferError> {
    let scatter = points.iter().map(|p| ScatterRow { task: p.task.clone(), x: p.x, y: p.y }).collect();
    let step = (fit.x_max - fit.x_min) / (BAND_POINTS - 1) as f64;
    let band = (0..BAND_POINTS)
        .map(|i| {
            let x = if i == BAND_POINTS - 1 { fit.x_max } else { fit.x_min + step * i as f64 };
            let b = predict_with_band(fit, x)?;
            Ok(BandRow { x, y_hat: b.y_hat, lower: b.lower, upper: b.upper })
        })
        .collect::<Result<Vec<_>, TransferError>>()?;
    Ok(PlotData { scatter, band })
}

/// One CSV with header `kind,task,x,y,y_hat,lower,upper`; scatter rows leave
/// the band columns empty and band rows leave `task` and `y` empty.
pub fn write_plot_csv<W: Write>(data: &PlotData, out: W) -> Result<(), TransferError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| TransferError::Table(e.to_string());
    w.write_record(["kind", "task", "x", "y", "y_hat", "lower", "upper"]).map_err(err)?;
    for s in &data.scatter {
        w.write_record(["scatter", &s.task, &s.x.to_string(), &s.y.to_string(), "", "", ""]).map_err(err)?;
    }
    for b in &data.band {
        w.write_record([
            "band",
            "",
            &b.x.to_string(),
            "",
            &b.y_hat.to_string(),
            &b.lower.to_string(),
            &b.upper.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| TransferError::Table(e.to_string()))
}
