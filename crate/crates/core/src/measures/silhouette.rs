use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MeasureError, DEGENERATE_EPS};
use crate::embed_io::{EmbeddingMatrix, TaskEmbeddings};
use crate::reduce::{column_sums, dot_f32_f64, sq_dist_f32, sq_norm_f32, sum_indexed, sum_rows};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `1 - x . y` on unit-normalized rows.
    Cosine,
    Euclidean,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
        }
    }
}

/// Uniform sample of image rows, drawn without replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subsample {
    pub size: usize,
    pub seed: u64,
}

impl Subsample {
    /// Sorted row indices, or `None` when the sample would cover every row.
    pub fn indices(&self, rows: usize) -> Option<Vec<usize>> {
        if self.size >= rows {
            return None;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut picked = index::sample(&mut rng, rows, self.size).into_vec();
        picked.sort_unstable();
        Some(picked)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteResult {
    pub score: f64,
    pub metric: Metric,
    /// Image rows actually used (`n` unless subsampled).
    pub images_used: usize,
    /// A cluster had one member; its intra distance was taken as 0.
    pub singleton_cluster: bool,
}

/// Per-point silhouette value with the `max(a, b) = 0` case mapped to 0.
#[inline]
fn point_score(a: f64, b: f64) -> f64 {
    let denom = a.max(b);
    if denom <= DEGENERATE_EPS {
        0.0
    } else {
        (b - a) / denom
    }
}

/// Cosine silhouette via column sums: for an image `x`,
/// `a = 1 - (x . s_I - ||x||^2) / (n - 1)` and `b = 1 - x . s_T / k`.
fn cosine_total(images: &EmbeddingMatrix, texts: &EmbeddingMatrix) -> f64 {
    let image_sum = column_sums(images);
    let text_sum = column_sums(texts);
    let side = |own: &EmbeddingMatrix, own_sum: &[f64], other_sum: &[f64], other_len: usize| {
        let own_len = own.rows();
        sum_rows(own, |_, r| {
            let a = if own_len > 1 {
                (1.0 - (dot_f32_f64(r, own_sum) - sq_norm_f32(r)) / (own_len as f64 - 1.0)).max(0.0)
            } else {
                0.0
            };
            let b = (1.0 - dot_f32_f64(r, other_sum) / other_len as f64).max(0.0);
            point_score(a, b)
        })
    };
    side(images, &image_sum, &text_sum, texts.rows()) + side(texts, &text_sum, &image_sum, images.rows())
}

fn distance_sum(row: &[f32], m: &EmbeddingMatrix) -> f64 {
    m.iter_rows().map(|other| sq_dist_f32(row, other).sqrt()).sum()
}

/// Exact Euclidean silhouette; quadratic in the number of points.
fn euclidean_total(images: &EmbeddingMatrix, texts: &EmbeddingMatrix) -> f64 {
    let n = images.rows();
    let k = texts.rows();
    sum_indexed(n + k, |p| {
        let (row, own, other) = if p < n { (images.row(p), images, texts) } else { (texts.row(p - n), texts, images) };
        let a = if own.rows() > 1 { distance_sum(row, own) / (own.rows() as f64 - 1.0) } else { 0.0 };
        let b = distance_sum(row, other) / other.rows() as f64;
        point_score(a, b)
    })
}

/// Mean silhouette over all image and text points, treating images and texts
/// as the two clusters.
///
/// `subsample` applies to the Euclidean path only: the image cluster is
/// replaced by a seeded uniform sample of its rows.
pub fn silhouette(
    t: &TaskEmbeddings,
    metric: Metric,
    subsample: Option<Subsample>,
) -> Result<SilhouetteResult, MeasureError> {
    let n = t.n_images();
    let k = t.n_classes();
    if n + k < 2 {
        return Err(MeasureError::InsufficientData("silhouette needs at least 2 points".into()));
    }
    if let Some(s) = subsample {
        if s.size == 0 {
            return Err(MeasureError::Parameter("silhouette subsample size must be positive".into()));
        }
    }
    let (total, images_used, singleton) = match metric {
        Metric::Cosine => (cosine_total(t.images(), t.texts()), n, n == 1 || k == 1),
        Metric::Euclidean => {
            let sampled = subsample.and_then(|s| s.indices(n)).map(|idx| t.images().select_rows(&idx));
            let images = sampled.as_ref().unwrap_or(t.images());
            let used = images.rows();
            (euclidean_total(images, t.texts()), used, used == 1 || k == 1)
        }
    };
    Ok(SilhouetteResult { score: total / (images_used + k) as f64, metric, images_used, singleton_cluster: singleton })
}

/// Silhouette score without the bookkeeping.
pub fn silhouette_score(t: &TaskEmbeddings, metric: Metric) -> Result<f64, MeasureError> {
    silhouette(t, metric, None).map(|r| r.score)
}
