use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::TransferError;

/// Accuracy of a model fine-tuned on `train_task`, evaluated on `eval_task`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub model_id: String,
    pub train_task: String,
    pub eval_task: String,
    pub zero_shot_acc: f64,
    pub finetuned_acc: f64,
}

impl OutcomeRecord {
    pub fn is_in_domain(&self) -> bool {
        self.train_task == self.eval_task
    }
}

/// Targets derived for one (model, train task).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRecord {
    pub model_id: String,
    pub task: String,
    pub zero_shot_acc: f64,
    /// In-domain fine-tuned accuracy.
    pub finetuned_acc: f64,
    pub gain_over_zse: f64,
    /// Mean signed accuracy change on the other tasks; negative means forgetting.
    pub avg_ood_delta: Option<f64>,
    pub n_ood: usize,
}

fn check_unit(name: &str, v: f64) -> Result<(), TransferError> {
    if !(0.0..=1.0).contains(&v) || v.is_nan() {
        return Err(TransferError::Range(format!("{name} = {v} is outside [0, 1]")));
    }
    Ok(())
}

/// `(ft - zs) / (1 - zs)`: the share of zero-shot error closed by fine-tuning.
pub fn gain_over_zero_shot_error(zs: f64, ft: f64) -> Result<f64, TransferError> {
    check_unit("zero-shot accuracy", zs)?;
    check_unit("fine-tuned accuracy", ft)?;
    if zs == 1.0 {
        return Err(TransferError::PerfectZeroShot);
    }
    Ok((ft - zs) / (1.0 - zs))
}

/// One [`GainRecord`] per (model, train task), sorted by model then task.
pub fn build_gain_table(records: &[OutcomeRecord]) -> Result<Vec<GainRecord>, TransferError> {
    let mut seen = HashSet::new();
    let mut groups: BTreeMap<(&str, &str), Vec<&OutcomeRecord>> = BTreeMap::new();
    for r in records {
        check_unit("zero_shot_acc", r.zero_shot_acc)?;
        check_unit("finetuned_acc", r.finetuned_acc)?;
        if !seen.insert((&r.model_id, &r.train_task, &r.eval_task)) {
            return Err(TransferError::DuplicateRecord(format!(
                "model {}, train {}, eval {}",
                r.model_id, r.train_task, r.eval_task
            )));
        }
        groups.entry((&r.model_id, &r.train_task)).or_default().push(r);
    }

    let mut out = Vec::with_capacity(groups.len());
    for ((model, task), mut group) in groups {
        let in_domain = *group.iter().find(|r| r.is_in_domain()).ok_or_else(|| {
            TransferError::MissingRecord(format!("model {model}, train task {task} has no in-domain record"))
        })?;
        let gain = gain_over_zero_shot_error(in_domain.zero_shot_acc, in_domain.finetuned_acc)?;
        // Summation order must not depend on input order.
        group.sort_by(|a, b| a.eval_task.cmp(&b.eval_task));
        let deltas: Vec<f64> =
            group.iter().filter(|r| !r.is_in_domain()).map(|r| r.finetuned_acc - r.zero_shot_acc).collect();
        let avg_ood_delta = (!deltas.is_empty()).then(|| deltas.iter().sum::<f64>() / deltas.len() as f64);
        out.push(GainRecord {
            model_id: model.to_string(),
            task: task.to_string(),
            zero_shot_acc: in_domain.zero_shot_acc,
            finetuned_acc: in_domain.finetuned_acc,
            gain_over_zse: gain,
            avg_ood_delta,
            n_ood: deltas.len(),
        });
    }
    Ok(out)
}

const OUTCOME_COLUMNS: [&str; 5] = ["model_id", "train_task", "eval_task", "zero_shot_acc", "finetuned_acc"];

/// Reads the long-format outcomes table. Errors name the line and column.
pub fn read_outcomes_csv<R: Read>(input: R) -> Result<Vec<OutcomeRecord>, TransferError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().map_err(|e| TransferError::Table(e.to_string()))?.clone();
    let mut pos = [0usize; 5];
    for (slot, name) in pos.iter_mut().zip(OUTCOME_COLUMNS) {
        *slot = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| TransferError::Table(format!("line 1, column {name}: missing from header")))?;
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| TransferError::Table(format!("line {line}: {e}")))?;
        let text = |c: usize| -> Result<String, TransferError> {
            let v = rec.get(pos[c]).unwrap_or("");
            if v.is_empty() {
                return Err(TransferError::Table(format!("line {line}, column {}: empty", OUTCOME_COLUMNS[c])));
            }
            Ok(v.to_string())
        };
        let number = |c: usize| -> Result<f64, TransferError> {
            let raw = text(c)?;
            let v: f64 = raw.parse().map_err(|_| {
                TransferError::Table(format!("line {line}, column {}: {raw:?} is not a number", OUTCOME_COLUMNS[c]))
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(TransferError::Table(format!(
                    "line {line}, column {}: {v} is outside [0, 1]",
                    OUTCOME_COLUMNS[c]
                )));
            }
            Ok(v)
        };
        out.push(OutcomeRecord {
            model_id: text(0)?,
            train_task: text(1)?,
            eval_task: text(2)?,
            zero_shot_acc: number(3)?,
            finetuned_acc: number(4)?,
        });
    }
    Ok(out)
}

pub fn write_outcomes_csv<W: Write>(records: &[OutcomeRecord], out: W) -> Result<(), TransferError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| TransferError::Table(e.to_string());
    w.write_record(OUTCOME_COLUMNS).map_err(err)?;
    for r in records {
        w.write_record([
            r.model_id.clone(),
            r.train_task.clone(),
            r.eval_task.clone(),
            r.zero_shot_acc.to_string(),
            r.finetuned_acc.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| TransferError::Table(e.to_string()))
}
