//! Permutation importance of the King, per tree.
//!
//! For an evaluation set `B`, the importance is the mean increase in loss over
//! `B` after the King's values are shuffled among the rows of `B`:
//! squared error for regression, 0/1 misclassification for classification.
//! Values can be negative and are never clamped here.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{permute_column, Dataset, SeedContext, Task, PVIM_STREAM};
use crate::error::{IkfError, Result};
use crate::forest::{KingForest, KingTree, Tree};
use crate::{diagnostics, par};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalSource {
    /// Each tree's out-of-bag samples.
    Oob,
    /// A fixed set of sample indices shared by every tree.
    Holdout(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PvimParams {
    pub eval_source: EvalSource,
    /// Independent permutations averaged per tree.
    pub n_permutations: usize,
}

impl Default for PvimParams {
    fn default() -> Self {
        PvimParams {
            eval_source: EvalSource::Oob,
            n_permutations: 1,
        }
    }
}

#[inline]
fn loss(task: Task, y: f64, pred: f64) -> f64 {
    match task {
        Task::Regression => (y - pred) * (y - pred),
        Task::BinaryClassification => f64::from(y != pred),
    }
}

/// Importance of `var` for `tree` on the rows `eval`.
pub fn permutation_importance<R: Rng + ?Sized>(
    tree: &Tree,
    data: &Dataset,
    var: usize,
    eval: &[usize],
    n_permutations: usize,
    rng: &mut R,
) -> Result<f64> {
    if eval.is_empty() {
        return Err(IkfError::EmptyEvaluationSet);
    }
    if n_permutations < 1 {
        return Err(IkfError::InvalidParam("n_permutations must be >= 1".into()));
    }
    if !tree.uses(var) {
        return Ok(0.0);
    }
    let task = data.task();
    let y = data.y();
    let base: f64 = eval
        .iter()
        .map(|&i| loss(task, y[i], tree.predict_row(data, i)))
        .sum();
    let column = data.column(var);
    let original: Vec<f64> = eval.iter().map(|&i| column[i]).collect();
    let mut total = 0.0;
    for _ in 0..n_permutations {
        let shuffled = permute_column(&original, rng);
        let permuted: f64 = eval
            .iter()
            .zip(&shuffled)
            .map(|(&i, &v)| {
                let pred = tree.predict_with(|j| if j == var { v } else { data.value(i, j) });
                loss(task, y[i], pred)
            })
            .sum();
        total += (permuted - base) / eval.len() as f64;
    }
    Ok(total / n_permutations as f64)
}

fn eval_rows<'a>(tree: &'a KingTree, params: &'a PvimParams) -> &'a [usize] {
    match &params.eval_source {
        EvalSource::Oob => &tree.oob,
        EvalSource::Holdout(rows) => rows,
    }
}

/// King's importance for a single tree.
pub fn kings_pvim<R: Rng + ?Sized>(
    tree: &KingTree,
    data: &Dataset,
    king: usize,
    params: &PvimParams,
    rng: &mut R,
) -> Result<f64> {
    permutation_importance(&tree.tree, data, king, eval_rows(tree, params), params.n_permutations, rng)
}

/// Computes and stores every tree's King's importance. Tree `j` permutes
/// with `seeds.stream(PVIM_STREAM + j)`. A tree with an empty evaluation set
/// scores 0 and is counted in [`diagnostics`].
pub fn forest_pvims(
    forest: &mut KingForest,
    data: &Dataset,
    params: &PvimParams,
    seeds: &SeedContext,
) -> Result<Vec<f64>> {
    let king = forest.king;
    let values = par::try_map_range(forest.trees.len(), |j| {
        let tree = &forest.trees[j];
        if eval_rows(tree, params).is_empty() {
            diagnostics::empty_oob_tree();
            return Ok(0.0);
        }
        let mut rng = seeds.stream(PVIM_STREAM + j as u64);
        kings_pvim(tree, data, king, params, &mut rng)
    })?;
    for (tree, &v) in forest.trees.iter_mut().zip(&values) {
        tree.pvim = v;
    }
    Ok(values)
}

/// Per-depth aggregate of per-tree King's importances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthProfile {
    /// Entry `d - 1` is the mean over the depth-`d` forest's trees.
    pub mean: Vec<f64>,
    pub sum: Vec<f64>,
}

impl DepthProfile {
    /// Profile from forests whose importances are already stored.
    pub fn from_forests(forests: &[KingForest]) -> Self {
        let sum: Vec<f64> = forests
            .iter()
            .map(|f| f.trees.iter().map(|t| t.pvim).sum())
            .collect();
        let mean = sum
            .iter()
            .zip(forests)
            .map(|(s, f)| s / f.trees.len() as f64)
            .collect();
        DepthProfile { mean, sum }
    }
}

/// Scores forests of maximum depth 1..=D (in order) and returns the profile.
/// Forest `d` permutes with the streams of `seeds(d)`.
pub fn depth_profile_pvim(
    forests: &mut [KingForest],
    data: &Dataset,
    params: &PvimParams,
    seeds: impl Fn(usize) -> SeedContext,
) -> Result<DepthProfile> {
    for (i, forest) in forests.iter_mut().enumerate() {
        if forest.max_depth != i + 1 {
            return Err(IkfError::InvalidParam(format!(
                "forest {i} has max depth {}, expected {}",
                forest.max_depth,
                i + 1
            )));
        }
        forest_pvims(forest, data, params, &seeds(i + 1))?;
    }
    Ok(DepthProfile::from_forests(forests))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::default_names;
    use crate::forest::{build_forest, TreeParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn king_tree(text: &str, p: usize, oob: Vec<usize>) -> KingTree {
        let tree = Tree::from_text(text, &default_names(p)).unwrap();
        KingTree {
            king: tree.root_variable().unwrap_or(0),
            tree,
            inbag: vec![],
            oob,
            pvim: 0.0,
        }
    }

    #[test]
    fn single_leaf_tree_scores_zero() {
        let data = Dataset::from_columns(vec![vec![1.0, 2.0, 3.0]], vec![1.0, 0.0, 2.0], Task::Regression, None).unwrap();
        let t = KingTree {
            tree: Tree::leaf(1.0),
            king: 0,
            inbag: vec![],
            oob: vec![0, 1, 2],
            pvim: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(kings_pvim(&t, &data, 0, &PvimParams::default(), &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn constant_king_column_scores_zero() {
        let data = Dataset::from_columns(
            vec![vec![1.0, 1.0, 1.0, 5.0], vec![0.0, 1.0, 2.0, 3.0]],
            vec![1.0, 0.0, 2.0, 7.0],
            Task::Regression,
            None,
        )
        .unwrap();
        let t = king_tree("1 x1 2\n 2 leaf 1\n 2 leaf 7\n", 2, vec![0, 1, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = PvimParams {
            n_permutations: 5,
            ..PvimParams::default()
        };
        assert_eq!(kings_pvim(&t, &data, 0, &params, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn reversed_stump_flips_every_prediction() {
        // x1 = [-2,-1,1,2], y = [0,0,1,1]; a permutation sending x1 to
        // [1,2,-2,-1] misclassifies all four rows.
        let data = Dataset::from_columns(
            vec![vec![-2.0, -1.0, 1.0, 2.0]],
            vec![0.0, 0.0, 1.0, 1.0],
            Task::BinaryClassification,
            None,
        )
        .unwrap();
        let t = king_tree("1 x1 0\n 2 leaf 0\n 2 leaf 1\n", 1, vec![0, 1, 2, 3]);
        let base: f64 = (0..4).map(|i| loss(data.task(), data.y()[i], t.tree.predict_row(&data, i))).sum();
        assert_eq!(base, 0.0);
        let permuted = [1.0, 2.0, -2.0, -1.0];
        let flipped: f64 = (0..4)
            .map(|i| {
                let pred = t.tree.predict_with(|_| permuted[i]);
                loss(data.task(), data.y()[i], pred)
            })
            .sum();
        assert_eq!((flipped - base) / 4.0, 1.0);
        // Exact expectation over all 24 orderings of the King's column.
        let values = [-2.0, -1.0, 1.0, 2.0];
        let mut total = 0.0;
        let mut count = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let idx = [a, b, c, d];
                        if (0..4).any(|i| (i + 1..4).any(|j| idx[i] == idx[j])) {
                            continue;
                        }
                        let errs: f64 = (0..4)
                            .map(|i| loss(data.task(), data.y()[i], t.tree.predict_with(|_| values[idx[i]])))
                            .sum();
                        total += errs / 4.0;
                        count += 1.0;
                    }
                }
            }
        }
        let expected = total / count;
        assert_eq!(count, 24.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = PvimParams {
            n_permutations: 20_000,
            ..PvimParams::default()
        };
        let v = kings_pvim(&t, &data, 0, &params, &mut rng).unwrap();
        assert!((v - expected).abs() < 0.01, "{v} vs {expected}");
    }

    #[test]
    fn empty_eval_set_is_an_error() {
        let data = Dataset::from_columns(vec![vec![1.0, 2.0]], vec![1.0, 0.0], Task::Regression, None).unwrap();
        let t = king_tree("1 x1 1.5\n 2 leaf 1\n 2 leaf 0\n", 1, vec![]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            kings_pvim(&t, &data, 0, &PvimParams::default(), &mut rng),
            Err(IkfError::EmptyEvaluationSet)
        ));
    }

    #[test]
    fn unaffected_by_non_king_columns_in_stumps() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let c0: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let c1: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = c0.iter().map(|v| v * 2.0).collect();
        let mut c1_perm = c1.clone();
        c1_perm.reverse();
        let a = Dataset::from_columns(vec![c0.clone(), c1], y.clone(), Task::Regression, None).unwrap();
        let b = Dataset::from_columns(vec![c0, c1_perm], y, Task::Regression, None).unwrap();
        let t = king_tree("1 x1 0.5\n 2 leaf 0.5\n 2 leaf 1.5\n", 2, (0..n).collect());
        let params = PvimParams::default();
        let va = kings_pvim(&t, &a, 0, &params, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let vb = kings_pvim(&t, &b, 0, &params, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(va, vb);
        assert!(va > 0.0);
    }

    #[test]
    fn forest_pvims_store_and_repeat() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100;
        let x: Vec<f64> = (0..n * 3).map(|_| rng.random::<f64>() - 0.5).collect();
        let y: Vec<f64> = (0..n).map(|i| 4.0 * x[i] + 0.1 * rng.random::<f64>()).collect();
        let data = Dataset::from_column_major(n, 3, x, y, Task::Regression, None).unwrap();
        let seeds = SeedContext::new(3);
        let mut f = build_forest(&data, 0, &[1.0; 3], &[0, 1, 2], 2, &TreeParams::default(), 8, &seeds).unwrap();
        let mut g = f.clone();
        let a = forest_pvims(&mut f, &data, &PvimParams::default(), &seeds).unwrap();
        let b = forest_pvims(&mut g, &data, &PvimParams::default(), &seeds).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
        assert!(f.trees.iter().zip(&a).all(|(t, v)| t.pvim == *v));
        assert!(a.iter().all(|v| *v > 0.0));

        let mut one = build_forest(&data, 0, &[1.0; 3], &[0, 1, 2], 2, &TreeParams::default(), 1, &seeds).unwrap();
        let direct = kings_pvim(&one.trees[0], &data, 0, &PvimParams::default(), &mut seeds.stream(PVIM_STREAM)).unwrap();
        assert_eq!(forest_pvims(&mut one, &data, &PvimParams::default(), &seeds).unwrap(), vec![direct]);
    }

    #[test]
    fn profile_of_leaf_forests_is_zero() {
        let data = Dataset::from_columns(vec![vec![0.0, 1.0, 2.0, 3.0]], vec![1.0; 4], Task::Regression, None).unwrap();
        let leaf_forest = |d| KingForest {
            trees: vec![KingTree {
                tree: Tree::leaf(1.0),
                king: 0,
                inbag: vec![],
                oob: vec![0, 1],
                pvim: 0.0,
            }],
            king: 0,
            max_depth: d,
            candidate_pool: vec![0],
            weights_used: vec![1.0],
        };
        let mut forests = vec![leaf_forest(1), leaf_forest(2), leaf_forest(3)];
        let prof = depth_profile_pvim(&mut forests, &data, &PvimParams::default(), |_| SeedContext::new(0)).unwrap();
        assert_eq!(prof.mean, vec![0.0; 3]);
        assert_eq!(prof.sum, vec![0.0; 3]);
    }
}
