use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::npy::{read_npy, write_atomic, write_npy, NpyArray, NpyData};
use super::{normalize_rows, EmbedError, EmbeddingMatrix, LabelVector, TaskEmbeddings, DEFAULT_NORM_TOLERANCE};

/// Hex SHA-256 digests of the three task files. Any may be omitted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestChecksums {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// JSON descriptor binding the embedding files of one (model, task).
///
/// Relative paths are resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub task_id: String,
    pub model_id: String,
    pub image_path: PathBuf,
    pub text_path: PathBuf,
    pub label_path: PathBuf,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub normalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checksum: Option<ManifestChecksums>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_template: Option<String>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self, EmbedError> {
        serde_json::from_str(text).map_err(|e| EmbedError::Manifest(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Allowed deviation of row norms from 1 when the manifest says `normalized`.
    pub norm_tolerance: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { norm_tolerance: DEFAULT_NORM_TOLERANCE }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_checked(path: &Path, expected: Option<&str>, what: &str) -> Result<NpyArray, EmbedError> {
    let bytes = fs::read(path).map_err(|e| EmbedError::io(path, e))?;
    match expected {
        Some(want) => {
            let got = sha256_hex(&bytes);
            if !got.eq_ignore_ascii_case(want.trim()) {
                return Err(EmbedError::Integrity(format!(
                    "{what} file {} has SHA-256 {got}, manifest says {want}",
                    path.display()
                )));
            }
        }
        None => warn!("no checksum for {what} file {}; skipping integrity check", path.display()),
    }
    read_npy(&bytes)
}

fn into_matrix(array: NpyArray, what: &str, rows: usize, dim: usize) -> Result<EmbeddingMatrix, EmbedError> {
    let shape = array.shape.clone();
    if shape != [rows, dim] {
        return Err(EmbedError::Integrity(format!(
            "{what} array has shape {shape:?}, manifest declares ({rows}, {dim})"
        )));
    }
    let values = match array.data {
        NpyData::F32(v) => v,
        NpyData::F64(v) => v.into_iter().map(|x| x as f32).collect(),
        NpyData::I64(_) => return Err(EmbedError::Dtype(format!("<i8 is not valid for {what} embeddings"))),
    };
    EmbeddingMatrix::new(rows, dim, values)
}

/// Loads and cross-validates a task from its manifest using default options.
pub fn load_task(manifest_path: impl AsRef<Path>) -> Result<TaskEmbeddings, EmbedError> {
    load_task_with(manifest_path, LoadOptions::default())
}

pub fn load_task_with(manifest_path: impl AsRef<Path>, opts: LoadOptions) -> Result<TaskEmbeddings, EmbedError> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(|e| EmbedError::io(manifest_path, e))?;
    let manifest = Manifest::from_json(&text)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let sums = manifest.checksum.clone().unwrap_or_default();

    let images = read_checked(&base.join(&manifest.image_path), sums.image.as_deref(), "image")?;
    let texts = read_checked(&base.join(&manifest.text_path), sums.text.as_deref(), "text")?;
    let labels = read_checked(&base.join(&manifest.label_path), sums.label.as_deref(), "label")?;

    let images = into_matrix(images, "image", manifest.n, manifest.d)?;
    let texts = into_matrix(texts, "text", manifest.k, manifest.d)?;
    let labels = match (labels.data, labels.shape.as_slice()) {
        (NpyData::I64(v), &[len]) if len == manifest.n => LabelVector::from_i64(&v)?,
        (NpyData::I64(_), shape) => {
            return Err(EmbedError::Integrity(format!(
                "label array has shape {shape:?}, manifest declares ({},)",
                manifest.n
            )))
        }
        _ => return Err(EmbedError::Dtype("labels must be stored as <i8".into())),
    };
    labels.validate_range(manifest.k)?;
    let empty = labels.empty_classes(manifest.k);
    if !empty.is_empty() {
        warn!("task {}: {} class(es) have no images (first: {})", manifest.task_id, empty.len(), empty[0]);
    }

    let (images, texts) =
        if manifest.normalized { (images, texts) } else { (normalize_rows(&images)?, normalize_rows(&texts)?) };
    TaskEmbeddings::new(manifest.task_id, manifest.model_id, images, texts, labels, opts.norm_tolerance)
}

/// Writes `DIR/{task}__{model}/{images,texts,labels}.npy` plus `manifest.json`
/// with checksums. Returns the manifest path.
pub fn write_task(
    dir: impl AsRef<Path>,
    task: &TaskEmbeddings,
    prompt_template: Option<&str>,
) -> Result<PathBuf, EmbedError> {
    let out = dir.as_ref().join(format!("{}__{}", task.task_id(), task.model_id()));
    fs::create_dir_all(&out).map_err(|e| EmbedError::io(&out, e))?;

    let encode_matrix = |m: &EmbeddingMatrix| {
        write_npy(&NpyArray { shape: vec![m.rows(), m.dim()], data: NpyData::F32(m.values().to_vec()) })
    };
    let image_bytes = encode_matrix(task.images());
    let text_bytes = encode_matrix(task.texts());
    let label_bytes = write_npy(&NpyArray {
        shape: vec![task.n_images()],
        data: NpyData::I64(task.labels().as_slice().iter().map(|&v| v as i64).collect()),
    });

    write_atomic(&out.join("images.npy"), &image_bytes)?;
    write_atomic(&out.join("texts.npy"), &text_bytes)?;
    write_atomic(&out.join("labels.npy"), &label_bytes)?;

    let manifest = Manifest {
        task_id: task.task_id().to_string(),
        model_id: task.model_id().to_string(),
        image_path: "images.npy".into(),
        text_path: "texts.npy".into(),
        label_path: "labels.npy".into(),
        n: task.n_images(),
        k: task.n_classes(),
        d: task.dim(),
        normalized: true,
        checksum: Some(ManifestChecksums {
            image: Some(sha256_hex(&image_bytes)),
            text: Some(sha256_hex(&text_bytes)),
            label: Some(sha256_hex(&label_bytes)),
        }),
        prompt_template: prompt_template.map(str::to_string),
    };
    let path = out.join("manifest.json");
    write_atomic(&path, manifest.to_json().as_bytes())?;
    Ok(path)
}
