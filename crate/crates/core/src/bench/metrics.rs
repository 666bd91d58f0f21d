//! Recovery metrics over a ranking or a set of shortlists.

use crate::error::{IkfError, Result};
use crate::forest::PathRecord;
use crate::ikf::IkfReport;
use crate::kings::Metric;

/// Quantile levels reported for the minimum ranked size.
pub const QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Length of the shortest ranking prefix holding every member of `truth`.
pub fn mrs(ranking: &[usize], truth: &[usize]) -> Result<usize> {
    let mut last = 0;
    for &t in truth {
        let at = ranking
            .iter()
            .position(|&v| v == t)
            .ok_or(IkfError::MissingFromRanking(t))?;
        last = last.max(at + 1);
    }
    Ok(last)
}

/// Whether some record's variable set equals `target` in any order.
pub fn records_hit<'a>(records: impl IntoIterator<Item = &'a PathRecord>, target: &[usize]) -> bool {
    let mut want = target.to_vec();
    want.sort_unstable();
    records.into_iter().any(|r| r.vars.len() == want.len() && r.var_set() == want)
}

/// Whether `target` shows up in either depth-`|target|` shortlist of any King.
pub fn interaction_hit(report: &IkfReport, target: &[usize]) -> bool {
    Metric::ALL
        .iter()
        .any(|&m| records_hit(report.concatenated(target.len(), m), target))
}

/// Whether `var` is among the first `size` ranked variables.
pub fn selected(ranking: &[usize], var: usize, size: usize) -> bool {
    ranking.iter().take(size).any(|&v| v == var)
}

/// Nearest-rank quantile of `values`: the element at sorted index
/// `ceil(q * len) - 1`, clamped to the valid range.
pub fn nearest_rank(values: &[usize], q: f64) -> usize {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

/// Smaller screening size, `floor(n / (2 ln n))`.
pub fn small_model_size(n: usize) -> usize {
    (n as f64 / (2.0 * (n as f64).ln())).floor() as usize
}

/// Larger screening size, `floor(n / ln n)`.
pub fn large_model_size(n: usize) -> usize {
    (n as f64 / (n as f64).ln()).floor() as usize
}
