use super::EmbedError;

/// Default tolerance on `| ||row|| - 1 |` for inputs declared normalized.
pub const DEFAULT_NORM_TOLERANCE: f64 = 1e-3;

/// Row-major `f32` matrix of embeddings, one embedding per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f32>,
}

impl EmbeddingMatrix {
    /// Builds a matrix, checking `rows >= 1`, `dim >= 2`, the value count and
    /// that every entry is finite.
    pub fn new(rows: usize, dim: usize, values: Vec<f32>) -> Result<Self, EmbedError> {
        if rows < 1 {
            return Err(EmbedError::Shape("matrix must have at least one row".into()));
        }
        if dim < 2 {
            return Err(EmbedError::Shape(format!("embedding dimension must be >= 2, got {dim}")));
        }
        let expected = rows.checked_mul(dim).ok_or_else(|| EmbedError::Shape("matrix too large".into()))?;
        if values.len() != expected {
            return Err(EmbedError::Shape(format!(
                "{rows}x{dim} matrix needs {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite { row: pos / dim, col: pos % dim });
        }
        Ok(Self { rows, dim, values })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self, EmbedError> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(EmbedError::Shape("ragged rows".into()));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.values.chunks_exact(self.dim)
    }

    /// Euclidean norm of each row, computed in `f64`.
    pub fn row_norms(&self) -> Vec<f64> {
        self.iter_rows().map(|r| r.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()).collect()
    }

    /// First row whose norm is not within `tolerance` of 1.
    pub fn check_normalized(&self, tolerance: f64) -> Result<(), EmbedError> {
        for (row, norm) in self.row_norms().into_iter().enumerate() {
            if (norm - 1.0).abs() > tolerance {
                return Err(EmbedError::NotNormalized { row, norm, tolerance });
            }
        }
        Ok(())
    }

    /// Returns a copy with rows in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self { rows: indices.len(), dim: self.dim, values }
    }
}

/// Scales each row to unit Euclidean norm. Norms are computed in `f64`.
pub fn normalize_rows(m: &EmbeddingMatrix) -> Result<EmbeddingMatrix, EmbedError> {
    let mut values = Vec::with_capacity(m.values.len());
    for (i, row) in m.iter_rows().enumerate() {
        let norm = row.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(EmbedError::DegenerateRow { row: i });
        }
        values.extend(row.iter().map(|&v| (v as f64 / norm) as f32));
    }
    EmbeddingMatrix::new(m.rows, m.dim, values)
}

/// Class index per image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    entries: Vec<usize>,
}

impl LabelVector {
    pub fn new(entries: Vec<usize>) -> Self {
        Self { entries }
    }

    /// Converts stored `i64` labels, rejecting negatives.
    pub fn from_i64(raw: &[i64]) -> Result<Self, EmbedError> {
        let mut entries = Vec::with_capacity(raw.len());
        for (i, &v) in raw.iter().enumerate() {
            let idx = usize::try_from(v)
                .map_err(|_| EmbedError::Label(format!("label at position {i} is negative ({v})")))?;
            entries.push(idx);
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.entries
    }

    pub fn validate_range(&self, classes: usize) -> Result<(), EmbedError> {
        if let Some((i, &v)) = self.entries.iter().enumerate().find(|(_, &v)| v >= classes) {
            return Err(EmbedError::Label(format!("label {v} at position {i} is outside [0, {classes})")));
        }
        Ok(())
    }

    /// Number of images per class.
    pub fn class_counts(&self, classes: usize) -> Vec<usize> {
        let mut counts = vec![0usize; classes];
        for &v in &self.entries {
            if v < classes {
                counts[v] += 1;
            }
        }
        counts
    }

    /// Classes that no image refers to.
    pub fn empty_classes(&self, classes: usize) -> Vec<usize> {
        self.class_counts(classes).iter().enumerate().filter(|(_, &c)| c == 0).map(|(i, _)| i).collect()
    }
}

/// Image embeddings, class-text embeddings and labels for one (model, task).
#[derive(Debug, Clone)]
pub struct TaskEmbeddings {
    images: EmbeddingMatrix,
    texts: EmbeddingMatrix,
    labels: LabelVector,
    task_id: String,
    model_id: String,
}

impl TaskEmbeddings {
    /// Cross-validates the parts. Rows must already be unit-normalized within
    /// `tolerance`.
    pub fn new(
        task_id: impl Into<String>,
        model_id: impl Into<String>,
        images: EmbeddingMatrix,
        texts: EmbeddingMatrix,
        labels: LabelVector,
        tolerance: f64,
    ) -> Result<Self, EmbedError> {
        if images.dim() != texts.dim() {
            return Err(EmbedError::Shape(format!(
                "image dimension {} differs from text dimension {}",
                images.dim(),
                texts.dim()
            )));
        }
        if labels.len() != images.rows() {
            return Err(EmbedError::Shape(format!("{} labels for {} images", labels.len(), images.rows())));
        }
        labels.validate_range(texts.rows())?;
        images.check_normalized(tolerance)?;
        texts.check_normalized(tolerance)?;
        Ok(Self { images, texts, labels, task_id: task_id.into(), model_id: model_id.into() })
    }

    /// Normalizes both matrices, then validates.
    pub fn normalized(
        task_id: impl Into<String>,
        model_id: impl Into<String>,
        images: &EmbeddingMatrix,
        texts: &EmbeddingMatrix,
        labels: LabelVector,
    ) -> Result<Self, EmbedError> {
        Self::new(task_id, model_id, normalize_rows(images)?, normalize_rows(texts)?, labels, DEFAULT_NORM_TOLERANCE)
    }

    pub fn images(&self) -> &EmbeddingMatrix {
        &self.images
    }

    pub fn texts(&self) -> &EmbeddingMatrix {
        &self.texts
    }

    pub fn labels(&self) -> &LabelVector {
        &self.labels
    }

    pub fn task_id(&self) -> &str {
        &self.task_id
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    /// Number of images (`n`).
    pub fn n_images(&self) -> usize {
        self.images.rows()
    }

    /// Number of classes (`k`).
    pub fn n_classes(&self) -> usize {
        self.texts.rows()
    }

    pub fn dim(&self) -> usize {
        self.images.dim()
    }

    /// Keeps only the given image rows (and their labels).
    pub fn with_image_subset(&self, indices: &[usize]) -> Self {
        let labels = LabelVector::new(indices.iter().map(|&i| self.labels.as_slice()[i]).collect());
        Self {
            images: self.images.select_rows(indices),
            texts: self.texts.clone(),
            labels,
            task_id: self.task_id.clone(),
            model_id: self.model_id.clone(),
        }
    }
}
