use serde::{Deserialize, Serialize};

use super::{t_distribution_sf, StatsError};

/// Largest `n` evaluated by full enumeration by default (9! = 362,880).
pub const DEFAULT_EXACT_THRESHOLD: usize = 9;
/// Hard cap on the enumeration size (12! ≈ 4.8e8).
pub const MAX_EXACT_THRESHOLD: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    ExactPermutation,
    TApprox,
}

impl CorrelationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationMethod::ExactPermutation => "exact_permutation",
            CorrelationMethod::TApprox => "t_approx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub rho: f64,
    /// Two-sided.
    pub p_value: f64,
    pub n: usize,
    pub method: CorrelationMethod,
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn rank_with_ties(values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::InsufficientData("cannot rank an empty array".into()));
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(StatsError::Data(format!("NaN at position {i}")));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    Ok(ranks)
}

/// Twice the centered rank, which is an integer even with ties.
fn doubled_centered(ranks: &[f64]) -> Vec<i64> {
    let n1 = ranks.len() as i64 + 1;
    ranks.iter().map(|r| (2.0 * r).round() as i64 - n1).collect()
}

/// Counts permutations `π` of `b` with `|Σ a_i b_π(i)| >= |Σ a_i b_i|`.
///
/// Heap's algorithm visits every permutation through single swaps, so the
/// statistic is updated in O(1) per permutation.
fn count_at_least_as_extreme(a: &[i64], b: &[i64]) -> (u64, u64) {
    let n = a.len();
    let mut b = b.to_vec();
    let observed: i64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let threshold = observed.abs();
    let mut stat = observed;
    let mut hits = 1u64;
    let mut total = 1u64;
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            let j = if i % 2 == 0 { 0 } else { c[i] };
            stat += (a[i] - a[j]) * (b[j] - b[i]);
            b.swap(i, j);
            total += 1;
            if stat.abs() >= threshold {
                hits += 1;
            }
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    (hits, total)
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman correlation with the default exact-enumeration threshold.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    spearman_with(x, y, DEFAULT_EXACT_THRESHOLD)
}

/// Spearman's rho with a two-sided p-value: exhaustive permutation when
/// `n <= exact_threshold`, otherwise the Student-t approximation with
/// `n - 2` degrees of freedom.
pub fn spearman_with(x: &[f64], y: &[f64], exact_threshold: usize) -> Result<CorrelationResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::Data(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::InsufficientData(format!("spearman needs n >= 3, got {n}")));
    }
    if exact_threshold > MAX_EXACT_THRESHOLD {
        return Err(StatsError::Parameter(format!(
            "exact threshold {exact_threshold} exceeds the maximum of {MAX_EXACT_THRESHOLD}"
        )));
    }
    let rx = rank_with_ties(x)?;
    let ry = rank_with_ties(y)?;
    let constant = |r: &[f64]| r.iter().all(|v| *v == r[0]);
    if constant(&rx) || constant(&ry) {
        return Err(StatsError::DegenerateData("constant input, rho is undefined".into()));
    }
    let rho = pearson(&rx, &ry);

    if n <= exact_threshold {
        let (hits, total) = count_at_least_as_extreme(&doubled_centered(&rx), &doubled_centered(&ry));
        return Ok(CorrelationResult {
            rho,
            p_value: hits as f64 / total as f64,
            n,
            method: CorrelationMethod::ExactPermutation,
        });
    }

    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        let df = (n - 2) as f64;
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        (2.0 * t_distribution_sf(t.abs(), (n - 2) as u64)?).min(1.0)
    };
    Ok(CorrelationResult { rho, p_value, n, method: CorrelationMethod::TApprox })
}
