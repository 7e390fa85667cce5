use super::{MeasureError, DEGENERATE_EPS};
use crate::embed_io::TaskEmbeddings;
use crate::reduce::{column_sums, sq_dist_f32_f64, sum_rows};

/// Image, text and pooled centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    pub image: Vec<f64>,
    pub text: Vec<f64>,
    pub global: Vec<f64>,
}

impl Centroids {
    pub fn compute(t: &TaskEmbeddings) -> Self {
        let n = t.n_images() as f64;
        let k = t.n_classes() as f64;
        let image_sum = column_sums(t.images());
        let text_sum = column_sums(t.texts());
        let global = image_sum.iter().zip(&text_sum).map(|(a, b)| (a + b) / (n + k)).collect();
        Self {
            image: image_sum.iter().map(|v| v / n).collect(),
            text: text_sum.iter().map(|v| v / k).collect(),
            global,
        }
    }

    /// `||image - text||`.
    pub fn separation(&self) -> f64 {
        sq_diff(&self.image, &self.text).sqrt()
    }
}

fn sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Gap vector `mean(images) - mean(texts)` and its Euclidean norm.
pub fn modality_gap(t: &TaskEmbeddings) -> (Vec<f64>, f64) {
    let c = Centroids::compute(t);
    let gap: Vec<f64> = c.image.iter().zip(&c.text).map(|(a, b)| a - b).collect();
    let norm = gap.iter().map(|v| v * v).sum::<f64>().sqrt();
    (gap, norm)
}

/// Two-cluster Davies-Bouldin index: `(S_I + S_T) / ||x̄ - ȳ||`, where `S_X` is
/// the mean distance of a cluster's points to its centroid.
pub fn davies_bouldin(t: &TaskEmbeddings) -> Result<f64, MeasureError> {
    let c = Centroids::compute(t);
    let separation = c.separation();
    if separation <= DEGENERATE_EPS {
        return Err(MeasureError::DegenerateGeometry(format!(
            "image and text centroids coincide (distance {separation:e})"
        )));
    }
    let spread_images = sum_rows(t.images(), |_, r| sq_dist_f32_f64(r, &c.image).sqrt()) / t.n_images() as f64;
    let spread_texts = sum_rows(t.texts(), |_, r| sq_dist_f32_f64(r, &c.text).sqrt()) / t.n_classes() as f64;
    Ok((spread_images + spread_texts) / separation)
}

struct SumsOfSquares {
    within: f64,
    between: f64,
    total_points: f64,
}

fn sums_of_squares(t: &TaskEmbeddings) -> Result<SumsOfSquares, MeasureError> {
    let n = t.n_images();
    let k = t.n_classes();
    if n + k < 3 {
        return Err(MeasureError::InsufficientData(format!(
            "Calinski-Harabasz needs at least 3 points, got {}",
            n + k
        )));
    }
    let c = Centroids::compute(t);
    let within = sum_rows(t.images(), |_, r| sq_dist_f32_f64(r, &c.image))
        + sum_rows(t.texts(), |_, r| sq_dist_f32_f64(r, &c.text));
    let between = n as f64 * sq_diff(&c.image, &c.global) + k as f64 * sq_diff(&c.text, &c.global);
    if between <= DEGENERATE_EPS {
        return Err(MeasureError::DegenerateGeometry(format!("between-cluster sum of squares is {between:e}")));
    }
    Ok(SumsOfSquares { within, between, total_points: (n + k) as f64 })
}

/// Calinski-Harabasz in the orientation `IntraSS / (InterSS / (N - 2))`.
///
/// This is the reciprocal arrangement of the conventional index; see
/// [`calinski_harabasz_standard`] for the between-over-within form.
pub fn calinski_harabasz(t: &TaskEmbeddings) -> Result<f64, MeasureError> {
    let ss = sums_of_squares(t)?;
    Ok(ss.within / (ss.between / (ss.total_points - 2.0)))
}

/// Conventional Calinski-Harabasz index for two clusters:
/// `(InterSS / 1) / (IntraSS / (N - 2))`.
pub fn calinski_harabasz_standard(t: &TaskEmbeddings) -> Result<f64, MeasureError> {
    let ss = sums_of_squares(t)?;
    if ss.within <= DEGENERATE_EPS {
        return Err(MeasureError::DegenerateGeometry(format!("within-cluster sum of squares is {:e}", ss.within)));
    }
    Ok(ss.between / (ss.within / (ss.total_points - 2.0)))
}
