//! Impurity measures and the exhaustive threshold scan.

use crate::data::Task;
use crate::error::{IkfError, Result};

/// Splits whose decrease does not exceed this fraction of the parent
/// impurity are treated as no improvement.
pub const MIN_RELATIVE_DECREASE: f64 = 1e-12;

/// Size-weighted node impurity: sum of squared deviations (regression) or
/// `n * gini` (classification).
pub fn node_impurity(y: &[f64], task: Task) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let n = y.len() as f64;
    match task {
        Task::Regression => {
            let mean = y.iter().sum::<f64>() / n;
            y.iter().map(|v| (v - mean).powi(2)).sum()
        }
        Task::BinaryClassification => {
            let ones = y.iter().filter(|&&v| v == 1.0).count() as f64;
            let p1 = ones / n;
            n * (1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1))
        }
    }
}

/// Impurity of `parent` minus the impurities of its two children.
pub fn impurity_decrease(parent: &[f64], left: &[f64], right: &[f64], task: Task) -> Result<f64> {
    if left.is_empty() || right.is_empty() {
        return Err(IkfError::InvalidParam("split child is empty".into()));
    }
    if left.len() + right.len() != parent.len() {
        return Err(IkfError::InvalidParam(
            "children do not partition the parent".into(),
        ));
    }
    Ok(node_impurity(parent, task) - node_impurity(left, task) - node_impurity(right, task))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SplitCandidate {
    pub var: usize,
    pub threshold: f64,
    pub decrease: f64,
}

impl SplitCandidate {
    /// Larger decrease wins; exact ties go to the lower variable index.
    pub fn beats(&self, other: &SplitCandidate) -> bool {
        self.decrease > other.decrease
            || (self.decrease == other.decrease && self.var < other.var)
    }
}

/// Midpoint strictly above `lo` so that `lo` goes left and `hi` goes right.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo * 0.5 + hi * 0.5;
    if mid > lo {
        mid
    } else {
        hi
    }
}

/// Best threshold for one variable. `pairs` holds (value, response) of the
/// node's samples and is sorted in place. Returns `(decrease, threshold)`;
/// among equal decreases the lowest threshold wins.
pub(crate) fn best_threshold(
    pairs: &mut [(f64, f64)],
    min_leaf: usize,
    task: Task,
) -> Option<(f64, f64)> {
    let m = pairs.len();
    if m < 2 * min_leaf.max(1) {
        return None;
    }
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    if pairs[0].0 == pairs[m - 1].0 {
        return None;
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mf = m as f64;
    let mut left = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for k in 0..m - 1 {
        left += pairs[k].1;
        let n_left = k + 1;
        let n_right = m - n_left;
        if n_right < min_leaf {
            break;
        }
        if n_left < min_leaf || pairs[k].0 == pairs[k + 1].0 {
            continue;
        }
        let (nl, nr) = (n_left as f64, n_right as f64);
        let right = total - left;
        let decrease = match task {
            Task::Regression => {
                let diff = left / nl - right / nr;
                nl * nr / mf * diff * diff
            }
            Task::BinaryClassification => {
                let parent = 2.0 * total * (mf - total) / mf;
                let l = 2.0 * left * (nl - left) / nl;
                let r = 2.0 * right * (nr - right) / nr;
                parent - l - r
            }
        };
        if best.is_none_or(|(b, _)| decrease > b) {
            best = Some((decrease, midpoint(pairs[k].0, pairs[k + 1].0)));
        }
    }
    best
}
