use super::MeasureError;
use crate::embed_io::{EmbeddingMatrix, TaskEmbeddings};
use crate::reduce::{column_sums, dot_f32, dot_f32_f64, sq_norm_f32, sum_rows};

/// Mean cosine similarity over unordered row pairs:
/// `(||sum x||^2 - sum ||x||^2) / (n (n - 1))`.
fn mean_pairwise_similarity(m: &EmbeddingMatrix, what: &str) -> Result<f64, MeasureError> {
    let n = m.rows();
    if n < 2 {
        return Err(MeasureError::InsufficientData(format!("{what} needs at least 2 rows, got {n}")));
    }
    let sums = column_sums(m);
    let total_sq: f64 = sums.iter().map(|v| v * v).sum();
    let self_sq = sum_rows(m, |_, r| sq_norm_f32(r));
    Ok((total_sq - self_sq) / (n as f64 * (n as f64 - 1.0)))
}

/// Mean pairwise cosine similarity among image embeddings.
pub fn intra_images_measure(t: &TaskEmbeddings) -> Result<f64, MeasureError> {
    mean_pairwise_similarity(t.images(), "intra-images measure")
}

/// Mean pairwise cosine similarity among class-text embeddings.
pub fn intra_texts_measure(t: &TaskEmbeddings) -> Result<f64, MeasureError> {
    mean_pairwise_similarity(t.texts(), "intra-texts measure")
}

/// Mean similarity of each image with its own label embedding.
pub fn correct_label_alignment(t: &TaskEmbeddings) -> Result<f64, MeasureError> {
    let labels = t.labels().as_slice();
    let texts = t.texts();
    let total = sum_rows(t.images(), |i, row| dot_f32(row, texts.row(labels[i])));
    Ok(total / t.n_images() as f64)
}

/// Mean similarity between images and the labels they do not belong to.
///
/// Each image contributes `(x . s_T - x . y(x)) / (k - 1)` where `s_T` is the
/// sum of all text embeddings.
pub fn inter_modal_measure(t: &TaskEmbeddings) -> Result<f64, MeasureError> {
    let k = t.n_classes();
    if k < 2 {
        return Err(MeasureError::InsufficientData(format!("inter-modal measure needs at least 2 classes, got {k}")));
    }
    let labels = t.labels().as_slice();
    let texts = t.texts();
    let text_sum = column_sums(texts);
    let total = sum_rows(t.images(), |i, row| dot_f32_f64(row, &text_sum) - dot_f32(row, texts.row(labels[i])));
    Ok(total / (t.n_images() as f64 * (k as f64 - 1.0)))
}

/// Inter-Intra Modal Measure: mean of the inter-modal and intra-images terms.
pub fn iimm(t: &TaskEmbeddings) -> Result<f64, MeasureError> {
    let inter = inter_modal_measure(t)?;
    let intra = intra_images_measure(t)?;
    Ok((inter + intra) / 2.0)
}
