//! Loading, validating and persisting embedding sets.
//!
//! Arrays are stored in the NPY v1.0 layout (`<f4`/`<f8` matrices, `<i8`
//! labels) next to a JSON [`Manifest`] that binds the three files of a task.

mod error;
mod manifest;
mod npy;
mod types;

pub use error::EmbedError;
pub use manifest::{load_task, load_task_with, write_task, LoadOptions, Manifest, ManifestChecksums};
pub use npy::{
    load_array, read_npy, write_atomic, write_labels, write_matrix, write_npy, Dtype, LoadedArray, NpyArray, NpyData,
};
pub use types::{normalize_rows, EmbeddingMatrix, LabelVector, TaskEmbeddings, DEFAULT_NORM_TOLERANCE};
