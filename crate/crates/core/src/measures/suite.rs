use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    calinski_harabasz, calinski_harabasz_standard, clustering_entropy, correct_label_alignment, davies_bouldin,
    inter_modal_measure, intra_images_measure, intra_texts_measure, modality_gap, silhouette, Bandwidth,
    EntropyOptions, MeasureError, Metric, Subsample,
};
use crate::embed_io::TaskEmbeddings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeasureName {
    Iimm,
    InterModal,
    IntraImages,
    IntraTexts,
    CorrectLabelAlignment,
    ModalityGap,
    SilhouetteCosine,
    SilhouetteEuclidean,
    DaviesBouldin,
    CalinskiHarabasz,
    CalinskiHarabaszStandard,
    ClusteringEntropy,
}

impl MeasureName {
    pub const ALL: [MeasureName; 12] = [
        MeasureName::Iimm,
        MeasureName::InterModal,
        MeasureName::IntraImages,
        MeasureName::IntraTexts,
        MeasureName::CorrectLabelAlignment,
        MeasureName::ModalityGap,
        MeasureName::SilhouetteCosine,
        MeasureName::SilhouetteEuclidean,
        MeasureName::DaviesBouldin,
        MeasureName::CalinskiHarabasz,
        MeasureName::CalinskiHarabaszStandard,
        MeasureName::ClusteringEntropy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MeasureName::Iimm => "iimm",
            MeasureName::InterModal => "inter_modal",
            MeasureName::IntraImages => "intra_images",
            MeasureName::IntraTexts => "intra_texts",
            MeasureName::CorrectLabelAlignment => "correct_label_alignment",
            MeasureName::ModalityGap => "modality_gap",
            MeasureName::SilhouetteCosine => "silhouette_cosine",
            MeasureName::SilhouetteEuclidean => "silhouette_euclidean",
            MeasureName::DaviesBouldin => "davies_bouldin",
            MeasureName::CalinskiHarabasz => "calinski_harabasz",
            MeasureName::CalinskiHarabaszStandard => "calinski_harabasz_standard",
            MeasureName::ClusteringEntropy => "clustering_entropy",
        }
    }
}

impl std::fmt::Display for MeasureName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeasureName {
    type Err = MeasureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MeasureName::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| MeasureError::UnknownMeasure(s.to_string()))
    }
}

/// Parses measure names, expanding `all`. Duplicates are dropped, order kept.
pub fn parse_selection<S: AsRef<str>>(names: &[S]) -> Result<Vec<MeasureName>, MeasureError> {
    let mut out = Vec::new();
    for raw in names {
        let raw = raw.as_ref().trim();
        if raw.is_empty() {
            continue;
        }
        let expanded: Vec<MeasureName> = if raw == "all" { MeasureName::ALL.to_vec() } else { vec![raw.parse()?] };
        for m in expanded {
            if !out.contains(&m) {
                out.push(m);
            }
        }
    }
    if out.is_empty() {
        return Err(MeasureError::EmptySelection);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureOptions {
    /// Seed for every subsampling step.
    pub seed: u64,
    /// Image sample size for the Euclidean silhouette; `None` is exact.
    pub silhouette_sample: Option<usize>,
    pub entropy_bandwidth: Bandwidth,
    pub entropy_sample_cap: usize,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self { seed: 0, silhouette_sample: None, entropy_bandwidth: Bandwidth::Scott, entropy_sample_cap: 2000 }
    }
}

/// Named measure values for one (model, task).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub task_id: String,
    pub model_id: String,
    pub values: BTreeMap<String, f64>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl MeasureReport {
    pub fn new(task_id: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self { task_id: task_id.into(), model_id: model_id.into(), values: BTreeMap::new(), metadata: BTreeMap::new() }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    /// `(measure, message)` for every measure that failed.
    pub fn errors(&self) -> Vec<(&str, &str)> {
        self.metadata.iter().filter_map(|(k, v)| k.strip_prefix("error.").map(|m| (m, v.as_str()))).collect()
    }

    pub fn has_errors(&self) -> bool {
        self.metadata.keys().any(|k| k.starts_with("error."))
    }
}

/// Lazily computed shared terms.
struct Cache<'a> {
    task: &'a TaskEmbeddings,
    inter: Option<Result<f64, MeasureError>>,
    intra: Option<Result<f64, MeasureError>>,
}

impl Cache<'_> {
    fn inter(&mut self) -> Result<f64, MeasureError> {
        let t = self.task;
        self.inter.get_or_insert_with(|| inter_modal_measure(t)).clone()
    }

    fn intra(&mut self) -> Result<f64, MeasureError> {
        let t = self.task;
        self.intra.get_or_insert_with(|| intra_images_measure(t)).clone()
    }
}

/// Computes every selected measure. A failing measure is recorded under
/// `error.<name>` in the metadata; only selection problems fail the call.
pub fn measure_suite(
    t: &TaskEmbeddings,
    selection: &[MeasureName],
    opts: &MeasureOptions,
) -> Result<MeasureReport, MeasureError> {
    if selection.is_empty() {
        return Err(MeasureError::EmptySelection);
    }
    let mut report = MeasureReport::new(t.task_id(), t.model_id());
    report.metadata.insert("n_images".into(), t.n_images().to_string());
    report.metadata.insert("n_classes".into(), t.n_classes().to_string());
    report.metadata.insert("dim".into(), t.dim().to_string());

    let mut cache = Cache { task: t, inter: None, intra: None };
    let mut seen = Vec::new();
    for &name in selection {
        if seen.contains(&name) {
            continue;
        }
        seen.push(name);
        let value = match name {
            MeasureName::Iimm => cache.inter().and_then(|a| cache.intra().map(|b| (a + b) / 2.0)),
            MeasureName::InterModal => cache.inter(),
            MeasureName::IntraImages => cache.intra(),
            MeasureName::IntraTexts => intra_texts_measure(t),
            MeasureName::CorrectLabelAlignment => correct_label_alignment(t),
            MeasureName::ModalityGap => Ok(modality_gap(t).1),
            MeasureName::SilhouetteCosine | MeasureName::SilhouetteEuclidean => {
                let metric = if name == MeasureName::SilhouetteCosine { Metric::Cosine } else { Metric::Euclidean };
                let sub = opts.silhouette_sample.map(|size| Subsample { size, seed: opts.seed });
                silhouette(t, metric, sub).map(|r| {
                    report.metadata.insert(format!("{name}.metric"), metric.as_str().into());
                    if r.images_used < t.n_images() {
                        report.metadata.insert(format!("{name}.images_used"), r.images_used.to_string());
                        report.metadata.insert(format!("{name}.seed"), opts.seed.to_string());
                    }
                    if r.singleton_cluster {
                        report.metadata.insert(format!("{name}.singleton_cluster"), "intra distance taken as 0".into());
                    }
                    r.score
                })
            }
            MeasureName::DaviesBouldin => davies_bouldin(t),
            MeasureName::CalinskiHarabasz => calinski_harabasz(t),
            MeasureName::CalinskiHarabaszStandard => calinski_harabasz_standard(t),
            MeasureName::ClusteringEntropy => {
                let eo = EntropyOptions {
                    bandwidth: opts.entropy_bandwidth,
                    sample_cap: opts.entropy_sample_cap,
                    seed: opts.seed,
                };
                report.metadata.insert(format!("{name}.bandwidth"), eo.bandwidth.describe());
                report.metadata.insert(format!("{name}.sample_cap"), eo.sample_cap.to_string());
                report.metadata.insert(format!("{name}.seed"), eo.seed.to_string());
                clustering_entropy(t, &eo)
            }
        };
        match value {
            Ok(v) if v.is_finite() => {
                report.values.insert(name.as_str().to_string(), v);
            }
            Ok(v) => {
                report.metadata.insert(format!("error.{name}"), format!("non-finite value {v}"));
            }
            Err(e) => {
                report.metadata.insert(format!("error.{name}"), e.to_string());
            }
        }
    }
    Ok(report)
}

fn column_order(reports: &[MeasureReport]) -> Vec<String> {
    let mut known: Vec<MeasureName> = Vec::new();
    let mut extra: Vec<String> = Vec::new();
    for r in reports {
        let failed = r.errors().into_iter().map(|(m, _)| m);
        for key in r.values.keys().map(String::as_str).chain(failed) {
            match key.parse::<MeasureName>() {
                Ok(m) => {
                    if !known.contains(&m) {
                        known.push(m);
                    }
                }
                Err(_) => {
                    if !extra.iter().any(|e| e == key) {
                        extra.push(key.to_string());
                    }
                }
            }
        }
    }
    known.sort();
    extra.sort();
    known.iter().map(|m| m.as_str().to_string()).chain(extra).collect()
}

/// Writes one row per report: `model_id,task,<measure columns...>`.
/// Missing or failed measures are left empty.
pub fn write_measures_csv<W: Write>(reports: &[MeasureReport], out: W) -> Result<(), MeasureError> {
    let columns = column_order(reports);
    let mut w = csv::Writer::from_writer(out);
    let table_err = |e: csv::Error| MeasureError::Table(e.to_string());
    let mut header = vec!["model_id".to_string(), "task".to_string()];
    header.extend(columns.iter().cloned());
    w.write_record(&header).map_err(table_err)?;
    for r in reports {
        let mut row = vec![r.model_id.clone(), r.task_id.clone()];
        row.extend(columns.iter().map(|c| r.values.get(c).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&row).map_err(table_err)?;
    }
    w.flush().map_err(|e| MeasureError::Table(e.to_string()))?;
    Ok(())
}

/// Reads a measures table. Columns after `model_id,task` are measure names,
/// including externally computed scores.
pub fn read_measures_csv<R: Read>(input: R) -> Result<Vec<MeasureReport>, MeasureError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().map_err(|e| MeasureError::Table(e.to_string()))?.clone();
    if header.len() < 3 || &header[0] != "model_id" || &header[1] != "task" {
        return Err(MeasureError::Table(
            "line 1: header must start with model_id,task followed by measure columns".into(),
        ));
    }
    let mut reports = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| MeasureError::Table(format!("line {line}: {e}")))?;
        let mut report = MeasureReport::new(&rec[1], &rec[0]);
        if report.task_id.is_empty() {
            return Err(MeasureError::Table(format!("line {line}, column task: empty task id")));
        }
        for (col, cell) in header.iter().zip(rec.iter()).skip(2) {
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| MeasureError::Table(format!("line {line}, column {col}: {cell:?} is not a number")))?;
            if !v.is_finite() {
                return Err(MeasureError::Table(format!("line {line}, column {col}: value must be finite")));
            }
            report.values.insert(col.to_string(), v);
        }
        reports.push(report);
    }
    Ok(reports)
}
