//! Embedding-geometry measures over a [`TaskEmbeddings`](crate::embed_io::TaskEmbeddings).
//!
//! Cosine quantities assume unit-normalized rows and are evaluated with
//! linear-time closed forms built from column sums. Euclidean silhouette and
//! the KDE entropy are the only quadratic measures.

mod cosine;
mod entropy;
mod error;
mod geometry;
mod silhouette;
mod suite;

pub use cosine::{correct_label_alignment, iimm, inter_modal_measure, intra_images_measure, intra_texts_measure};
pub use entropy::{cluster_entropy, clustering_entropy, Bandwidth, EntropyOptions};
pub use error::MeasureError;
pub use geometry::{calinski_harabasz, calinski_harabasz_standard, davies_bouldin, modality_gap, Centroids};
pub use silhouette::{silhouette, silhouette_score, Metric, SilhouetteResult, Subsample};
pub use suite::{
    measure_suite, parse_selection, read_measures_csv, write_measures_csv, MeasureName, MeasureOptions, MeasureReport,
};

/// Absolute threshold below which a denominator is treated as zero.
pub const DEGENERATE_EPS: f64 = 1e-12;
