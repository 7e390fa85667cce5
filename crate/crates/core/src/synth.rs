//! Seeded synthetic tasks and outcome tables for tests, demos and the
//! acceptance pipeline.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::embed_io::{normalize_rows, EmbeddingMatrix, LabelVector, TaskEmbeddings};
use crate::transfer::OutcomeRecord;

fn gaussian_vec<R: Rng>(rng: &mut R, len: usize) -> Vec<f32> {
    (0..len).map(|_| rng.sample::<f32, _>(StandardNormal)).collect()
}

/// `rows × dim` matrix with i.i.d. Gaussian rows scaled to unit norm.
pub fn random_unit_matrix<R: Rng>(rng: &mut R, rows: usize, dim: usize) -> EmbeddingMatrix {
    loop {
        let m = EmbeddingMatrix::new(rows, dim, gaussian_vec(rng, rows * dim)).expect("valid shape");
        if let Ok(n) = normalize_rows(&m) {
            return n;
        }
    }
}

/// Unstructured task: random unit images and texts, uniform labels.
pub fn random_task<R: Rng>(rng: &mut R, n: usize, k: usize, d: usize) -> TaskEmbeddings {
    let images = random_unit_matrix(rng, n, d);
    let texts = random_unit_matrix(rng, k, d);
    let labels = LabelVector::new((0..n).map(|_| rng.gen_range(0..k)).collect());
    TaskEmbeddings::new("random", "synthetic", images, texts, labels, 1e-3).expect("valid task")
}

/// Task with a shared offset direction whose weight is `concentration`.
///
/// Texts are `normalize(c·u + g_y)` and images `normalize(c·u + g_{label} + 0.7·e)`
/// with `g`, `e` Gaussian scaled by `1/√d`. Larger `c` packs both clouds into
/// a tighter cone, raising the intra-images and inter-modal similarities.
pub fn planted_task<R: Rng>(
    rng: &mut R,
    task_id: &str,
    model_id: &str,
    n: usize,
    k: usize,
    d: usize,
    concentration: f32,
) -> TaskEmbeddings {
    let scale = 1.0 / (d as f32).sqrt();
    let shared: Vec<f32> = {
        let u = gaussian_vec(rng, d);
        let norm = u.iter().map(|v| v * v).sum::<f32>().sqrt();
        u.into_iter().map(|v| v / norm).collect()
    };
    let class_dirs: Vec<Vec<f32>> =
        (0..k).map(|_| gaussian_vec(rng, d).into_iter().map(|v| v * scale).collect()).collect();

    let mut text_vals = Vec::with_capacity(k * d);
    for g in &class_dirs {
        text_vals.extend(shared.iter().zip(g).map(|(u, g)| concentration * u + g));
    }
    let labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.gen_range(0..k) }).collect();
    let mut image_vals = Vec::with_capacity(n * d);
    for &label in &labels {
        let noise = gaussian_vec(rng, d);
        image_vals.extend(
            shared.iter().zip(&class_dirs[label]).zip(noise).map(|((u, g), e)| concentration * u + g + 0.7 * scale * e),
        );
    }
    let images = EmbeddingMatrix::new(n, d, image_vals).expect("valid shape");
    let texts = EmbeddingMatrix::new(k, d, text_vals).expect("valid shape");
    TaskEmbeddings::normalized(task_id, model_id, &images, &texts, LabelVector::new(labels)).expect("valid task")
}

/// Outcome table for tasks whose in-domain gain over zero-shot error is
/// `gains[i]`. Every task is also evaluated on every other task, losing
/// accuracy in proportion to its own gain.
pub fn outcome_table<R: Rng>(rng: &mut R, model_id: &str, tasks: &[String], gains: &[f64]) -> Vec<OutcomeRecord> {
    let zero_shot: Vec<f64> = tasks.iter().map(|_| rng.gen_range(0.3..0.6)).collect();
    let mut out = Vec::with_capacity(tasks.len() * tasks.len());
    for (i, train) in tasks.iter().enumerate() {
        for (j, eval) in tasks.iter().enumerate() {
            let zs = zero_shot[j];
            let ft = if i == j { zs + gains[i] * (1.0 - zs) } else { zs - 0.1 * gains[i].max(0.0) * zs };
            out.push(OutcomeRecord {
                model_id: model_id.to_string(),
                train_task: train.clone(),
                eval_task: eval.clone(),
                zero_shot_acc: zs,
                finetuned_acc: ft.clamp(0.0, 1.0),
            });
        }
    }
    out
}
