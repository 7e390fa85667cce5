//! Resubstitution entropy of each cluster under a diagonal Gaussian KDE.
//!
//! For a sample `x_1..x_m` with per-dimension bandwidths `h`,
//! `log p(x_i) = logsumexp_j(-0.5 * sum_l ((x_il - x_jl) / h_l)^2) - ln m - sum_l ln h_l - (d/2) ln 2π`
//! and `H = -(1/m) sum_i log p(x_i)`.

use std::f64::consts::PI;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::MeasureError;
use crate::embed_io::{EmbeddingMatrix, TaskEmbeddings};
use crate::reduce::{pairwise_sum, sum_indexed};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// `sigma_l * m^(-1/(d+4))`
    Scott,
    /// `sigma_l * (m (d+2) / 4)^(-1/(d+4))`
    Silverman,
    /// Same bandwidth in every dimension.
    Fixed(f64),
}

impl Bandwidth {
    pub fn describe(&self) -> String {
        match self {
            Bandwidth::Scott => "scott".into(),
            Bandwidth::Silverman => "silverman".into(),
            Bandwidth::Fixed(h) => format!("fixed({h})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyOptions {
    pub bandwidth: Bandwidth,
    /// Clusters larger than this are uniformly subsampled.
    pub sample_cap: usize,
    pub seed: u64,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        Self { bandwidth: Bandwidth::Scott, sample_cap: 2000, seed: 0 }
    }
}

fn column_std(points: &[&[f32]], dim: usize) -> Vec<f64> {
    let m = points.len() as f64;
    (0..dim)
        .map(|l| {
            let col: Vec<f64> = points.iter().map(|p| p[l] as f64).collect();
            let mean = pairwise_sum(&col) / m;
            let dev: Vec<f64> = col.iter().map(|v| (v - mean) * (v - mean)).collect();
            (pairwise_sum(&dev) / (m - 1.0)).sqrt()
        })
        .collect()
}

fn bandwidths(points: &[&[f32]], dim: usize, rule: Bandwidth) -> Result<Vec<f64>, MeasureError> {
    let m = points.len() as f64;
    let d = dim as f64;
    let factor = match rule {
        Bandwidth::Fixed(h) => {
            if !(h.is_finite() && h > 0.0) {
                return Err(MeasureError::Parameter(format!("bandwidth must be positive, got {h}")));
            }
            return Ok(vec![h; dim]);
        }
        Bandwidth::Scott => m.powf(-1.0 / (d + 4.0)),
        Bandwidth::Silverman => (m * (d + 2.0) / 4.0).powf(-1.0 / (d + 4.0)),
    };
    let std = column_std(points, dim);
    if let Some(l) = std.iter().position(|&s| s <= 0.0 || !s.is_finite()) {
        return Err(MeasureError::SingularBandwidth(format!("dimension {l} has zero variance")));
    }
    Ok(std.into_iter().map(|s| s * factor).collect())
}

/// Entropy estimate for the given rows of `m` (all rows when `rows` is `None`).
pub fn cluster_entropy(m: &EmbeddingMatrix, rows: Option<&[usize]>, rule: Bandwidth) -> Result<f64, MeasureError> {
    let points: Vec<&[f32]> = match rows {
        Some(idx) => idx.iter().map(|&i| m.row(i)).collect(),
        None => m.iter_rows().collect(),
    };
    let first = points[0];
    if points.len() < 2 || points.iter().all(|p| *p == first) {
        return Err(MeasureError::SingularBandwidth("cluster needs at least 2 distinct points".into()));
    }
    let dim = m.dim();
    let h = bandwidths(&points, dim, rule)?;
    let inv_h: Vec<f64> = h.iter().map(|v| 1.0 / v).collect();
    let count = points.len();
    let log_norm = (count as f64).ln() + h.iter().map(|v| v.ln()).sum::<f64>() + 0.5 * dim as f64 * (2.0 * PI).ln();

    let total_log_density = sum_indexed(count, |i| {
        let xi = points[i];
        let exponents: Vec<f64> = points
            .iter()
            .map(|xj| {
                let q: f64 = xi
                    .iter()
                    .zip(xj.iter())
                    .zip(&inv_h)
                    .map(|((&a, &b), s)| {
                        let z = (a as f64 - b as f64) * s;
                        z * z
                    })
                    .sum();
                -0.5 * q
            })
            .collect();
        let max = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + exponents.iter().map(|e| (e - max).exp()).sum::<f64>().ln();
        lse - log_norm
    });
    Ok(-total_log_density / count as f64)
}

fn capped_rows(rows: usize, cap: usize, seed: u64) -> Option<Vec<usize>> {
    if rows <= cap {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = index::sample(&mut rng, rows, cap).into_vec();
    idx.sort_unstable();
    Some(idx)
}

/// Size-weighted mean of the image-cluster and text-cluster entropies.
pub fn clustering_entropy(t: &TaskEmbeddings, opts: &EntropyOptions) -> Result<f64, MeasureError> {
    if opts.sample_cap < 2 {
        return Err(MeasureError::Parameter("entropy sample cap must be at least 2".into()));
    }
    let n = t.n_images();
    let k = t.n_classes();
    let image_rows = capped_rows(n, opts.sample_cap, opts.seed);
    let text_rows = capped_rows(k, opts.sample_cap, opts.seed.wrapping_add(1));
    let h_images = cluster_entropy(t.images(), image_rows.as_deref(), opts.bandwidth)?;
    let h_texts = cluster_entropy(t.texts(), text_rows.as_deref(), opts.bandwidth)?;
    let total = (n + k) as f64;
    Ok(h_images * n as f64 / total + h_texts * k as f64 / total)
}
