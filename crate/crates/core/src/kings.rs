//! One King's forests: the weight-update loop, candidate pool selection, the
//! final depth-1..D forests, and ranked path shortlists.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SeedContext, Stage};
use crate::error::{IkfError, Result};
use crate::forest::{build_forest, extract_paths, KingForest, PathRecord, TreeParams};
use crate::par;
use crate::pvim::{depth_profile_pvim, forest_pvims, DepthProfile, PvimParams};

/// Size of the candidate pool used by the final forests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoolSize {
    /// `floor(n / (2 ln n))`.
    SampleScaled,
    /// `floor(p / 2)`.
    HalfOfVariables,
    Fixed(usize),
}

impl PoolSize {
    /// Resolved size, clamped to `1..=p`.
    pub fn resolve(self, n: usize, p: usize) -> usize {
        let raw = match self {
            PoolSize::SampleScaled => (n as f64 / (2.0 * (n as f64).ln())).floor() as usize,
            PoolSize::HalfOfVariables => p / 2,
            PoolSize::Fixed(k) => k,
        };
        raw.clamp(1, p)
    }
}

/// How a tree's importance enters a path's `pvim_sum`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathPvimMode {
    /// Once per occurrence of the path in the tree.
    PerOccurrence,
    /// Once per tree containing the path, however often.
    PerTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    PvimSum,
    Count,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::PvimSum, Metric::Count];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::PvimSum => "pvim_sum",
            Metric::Count => "count",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KingParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub n_iter: usize,
    pub pool_size: PoolSize,
    pub n_top: usize,
    pub tree: TreeParams,
    pub pvim: PvimParams,
    pub path_pvim: PathPvimMode,
}

impl Default for KingParams {
    fn default() -> Self {
        KingParams {
            n_trees: 100,
            max_depth: 4,
            n_iter: 7,
            pool_size: PoolSize::SampleScaled,
            n_top: 20,
            tree: TreeParams::default(),
            pvim: PvimParams::default(),
            path_pvim: PathPvimMode::PerOccurrence,
        }
    }
}

impl KingParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(IkfError::InvalidParam(m.into()));
        if self.n_trees < 1 {
            return bad("forest size must be >= 1");
        }
        if self.max_depth < 1 {
            return bad("max depth must be >= 1");
        }
        if self.n_iter < 1 {
            return bad("iteration count must be >= 1");
        }
        if self.n_top < 1 {
            return bad("shortlist length must be >= 1");
        }
        if self.pool_size == PoolSize::Fixed(0) {
            return bad("candidate pool size must be >= 1");
        }
        if self.pvim.n_permutations < 1 {
            return bad("n_permutations must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthShortlists {
    pub depth: usize,
    pub by_pvim_sum: Vec<PathRecord>,
    pub by_count: Vec<PathRecord>,
}

impl DepthShortlists {
    pub fn get(&self, metric: Metric) -> &[PathRecord] {
        match metric {
            Metric::PvimSum => &self.by_pvim_sum,
            Metric::Count => &self.by_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KingReport {
    pub king: usize,
    /// Weights after the last update iteration.
    pub weights: Vec<f64>,
    pub candidate_pool: Vec<usize>,
    pub profile: DepthProfile,
    /// One entry per depth `2..=D`, ascending.
    pub shortlists: Vec<DepthShortlists>,
}

impl KingReport {
    /// Mean King's importance at depths `1..=D`.
    pub fn pvim_profile(&self) -> &[f64] {
        &self.profile.mean
    }

    pub fn shortlist(&self, depth: usize, metric: Metric) -> &[PathRecord] {
        self.shortlists
            .iter()
            .find(|s| s.depth == depth)
            .map_or(&[], |s| s.get(metric))
    }
}

/// `w_i += PVIM_j` for every tree `j` with positive importance that splits
/// on `x_i` at least once.
pub fn update_weights(w_prev: &[f64], forest: &KingForest) -> Vec<f64> {
    let mut w = w_prev.to_vec();
    for t in &forest.trees {
        if t.pvim > 0.0 {
            for v in t.tree.split_variables() {
                w[v] += t.pvim;
            }
        }
    }
    w
}

/// Variables by descending weight; ties by ascending index.
pub fn rank_variables(w: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    order
}

/// Top `size` variables by weight, with the King forced in (it replaces the
/// last slot if needed). Returned ascending.
pub fn select_pool(w: &[f64], king: usize, size: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = rank_variables(w).into_iter().take(size.max(1)).collect();
    if !pool.contains(&king) {
        pool.pop();
        pool.push(king);
    }
    pool.sort_unstable();
    pool
}

/// Depth-`d` records of a scored forest with `pvim_sum` filled in.
pub fn score_paths(forest: &KingForest, d: usize, mode: PathPvimMode) -> Vec<PathRecord> {
    let mut sums: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for t in &forest.trees {
        let mut paths = t.tree.depth_paths(d);
        if mode == PathPvimMode::PerTree {
            paths.sort();
            paths.dedup();
        }
        for path in paths {
            *sums.entry(path).or_insert(0.0) += t.pvim;
        }
    }
    let mut records = extract_paths(forest, d);
    for r in &mut records {
        r.pvim_sum = sums[&r.vars];
    }
    records
}

fn compare_by(metric: Metric, a: &PathRecord, b: &PathRecord) -> Ordering {
    let primary = match metric {
        Metric::PvimSum => b.pvim_sum.total_cmp(&a.pvim_sum),
        Metric::Count => b.reproduction_count.cmp(&a.reproduction_count),
    };
    primary.then_with(|| a.vars.cmp(&b.vars))
}

/// The `n_top` best records by `metric`, descending; ties by variable tuple.
pub fn shortlist(records: &[PathRecord], metric: Metric, n_top: usize) -> Vec<PathRecord> {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| compare_by(metric, a, b));
    sorted.truncate(n_top);
    sorted
}

/// Runs the full King's-forests procedure for `king`.
///
/// `ordinal` is the King's position in the outer loop and only keys the
/// random streams.
pub fn run_kings_forests(
    data: &Dataset,
    king: usize,
    w_init: &[f64],
    params: &KingParams,
    seeds: &SeedContext,
    ordinal: u32,
) -> Result<KingReport> {
    params.validate()?;
    let p = data.p();
    if king >= p {
        return Err(IkfError::InvalidParam(format!("King {king} out of range")));
    }
    if w_init.len() != p || w_init.iter().any(|w| !(*w >= 0.0)) || !w_init.iter().any(|w| *w > 0.0) {
        return Err(IkfError::InvalidParam(
            "initial weights must be nonnegative with at least one positive entry".into(),
        ));
    }

    let all: Vec<usize> = (0..p).collect();
    let mut w = w_init.to_vec();
    for t in 0..params.n_iter {
        let ctx = seeds.with_stage(Stage::KingIteration {
            king: ordinal,
            iteration: t as u32,
        });
        let mut forest = build_forest(data, king, &w, &all, params.max_depth, &params.tree, params.n_trees, &ctx)?;
        forest_pvims(&mut forest, data, &params.pvim, &ctx)?;
        w = update_weights(&w, &forest);
    }

    let pool = select_pool(&w, king, params.pool_size.resolve(data.n(), p));
    let final_ctx = |d: usize| {
        seeds.with_stage(Stage::KingFinal {
            king: ordinal,
            depth: d as u32,
        })
    };
    let mut forests = par::try_map_range(params.max_depth, |i| {
        build_forest(data, king, &w, &pool, i + 1, &params.tree, params.n_trees, &final_ctx(i + 1))
    })?;
    let profile = depth_profile_pvim(&mut forests, data, &params.pvim, final_ctx)?;

    let shortlists = (2..=params.max_depth)
        .map(|d| {
            let records = score_paths(&forests[d - 1], d, params.path_pvim);
            DepthShortlists {
                depth: d,
                by_pvim_sum: shortlist(&records, Metric::PvimSum, params.n_top),
                by_count: shortlist(&records, Metric::Count, params.n_top),
            }
        })
        .collect();

    Ok(KingReport {
        king,
        weights: w,
        candidate_pool: pool,
        profile,
        shortlists,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{default_names, Task};
    use crate::forest::{KingTree, Tree};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn forest_of(trees: Vec<(&str, f64)>, p: usize) -> KingForest {
        let names = default_names(p);
        KingForest {
            trees: trees
                .into_iter()
                .map(|(text, pvim)| KingTree {
                    tree: Tree::from_text(text, &names).unwrap(),
                    king: 0,
                    inbag: vec![],
                    oob: vec![],
                    pvim,
                })
                .collect(),
            king: 0,
            max_depth: 3,
            candidate_pool: (0..p).collect(),
            weights_used: vec![1.0; p],
        }
    }

    const T13: &str = "1 x1 0\n 2 x3 0\n  3 leaf 0\n  3 leaf 1\n 2 leaf 2\n";
    const T15: &str = "1 x1 0\n 2 leaf 2\n 2 x5 0\n  3 leaf 0\n  3 leaf 1\n";

    #[test]
    fn non_positive_trees_leave_weights_alone() {
        let f = forest_of(vec![(T13, 0.0), (T15, -0.3)], 5);
        assert_eq!(update_weights(&[1.0; 5], &f), vec![1.0; 5]);
    }

    #[test]
    fn single_tree_update() {
        let f = forest_of(vec![(T13, 0.5)], 5);
        assert_eq!(update_weights(&[1.0; 5], &f), vec![1.5, 1.0, 1.5, 1.0, 1.0]);
    }

    #[test]
    fn two_tree_update_matches_double_sum() {
        let f = forest_of(vec![(T13, 0.2), (T15, -0.1)], 5);
        let w = update_weights(&[1.0; 5], &f);
        assert_eq!(w, vec![1.2, 1.0, 1.2, 1.0, 1.0]);
    }

    #[test]
    fn repeated_variable_counts_once_per_tree() {
        let tree = "1 x1 0\n 2 x2 0\n  3 leaf 0\n  3 leaf 1\n 2 x2 1\n  3 leaf 2\n  3 leaf 3\n";
        let f = forest_of(vec![(tree, 0.25)], 3);
        assert_eq!(update_weights(&[0.0; 3], &f), vec![0.25, 0.25, 0.0]);
    }

    #[test]
    fn ranking_rules() {
        assert_eq!(rank_variables(&[1.0; 4]), vec![0, 1, 2, 3]);
        assert_eq!(rank_variables(&[0.1, 3.0, 0.1]), vec![1, 0, 2]);
    }

    #[test]
    fn ranking_matches_stable_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let p = rng.random_range(1..30);
            let w: Vec<f64> = (0..p).map(|_| rng.random_range(0..6) as f64 * 0.5).collect();
            let mut oracle: Vec<(usize, f64)> = w.iter().copied().enumerate().collect();
            // stable sort keeps index order among equal weights
            oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
            let oracle: Vec<usize> = oracle.into_iter().map(|(i, _)| i).collect();
            assert_eq!(rank_variables(&w), oracle);
        }
    }

    #[test]
    fn occurrence_weighted_path_sums() {
        // Tree A holds (x1,x2) twice, tree B once.
        let a = "1 x1 0\n 2 x2 0\n  3 leaf 0\n  3 leaf 1\n 2 x2 1\n  3 leaf 2\n  3 leaf 3\n";
        let b = "1 x1 0\n 2 x2 0\n  3 leaf 0\n  3 leaf 1\n 2 x3 1\n  3 leaf 2\n  3 leaf 3\n";
        let f = forest_of(vec![(a, 0.4), (b, 0.1)], 3);
        let recs = score_paths(&f, 2, PathPvimMode::PerOccurrence);
        let r = recs.iter().find(|r| r.vars == vec![0, 1]).unwrap();
        assert_eq!(r.reproduction_count, 3);
        assert!((r.pvim_sum - 0.9).abs() < 1e-15);
        assert!((r.avg_pvim() - 0.3).abs() < 1e-15);
        let per_tree = score_paths(&f, 2, PathPvimMode::PerTree);
        let r = per_tree.iter().find(|r| r.vars == vec![0, 1]).unwrap();
        assert_eq!(r.reproduction_count, 3);
        assert!((r.pvim_sum - 0.5).abs() < 1e-15);
    }

    #[test]
    fn shortlist_order_and_ties() {
        let rec = |vars: Vec<usize>, c, s| PathRecord {
            vars,
            reproduction_count: c,
            pvim_sum: s,
        };
        let recs = vec![rec(vec![0, 3], 5, 1.0), rec(vec![0, 2], 5, 2.0), rec(vec![0, 1], 9, 1.0)];
        let by_sum: Vec<_> = shortlist(&recs, Metric::PvimSum, 3).into_iter().map(|r| r.vars).collect();
        assert_eq!(by_sum, vec![vec![0, 2], vec![0, 1], vec![0, 3]]);
        let by_count: Vec<_> = shortlist(&recs, Metric::Count, 2).into_iter().map(|r| r.vars).collect();
        assert_eq!(by_count, vec![vec![0, 1], vec![0, 2]]);
    }

    #[test]
    fn pool_forces_king() {
        assert_eq!(select_pool(&[5.0, 4.0, 3.0, 0.1], 3, 2), vec![0, 3]);
        assert_eq!(select_pool(&[5.0, 4.0, 3.0, 0.1], 1, 2), vec![0, 1]);
        assert_eq!(PoolSize::SampleScaled.resolve(200, 500), 18);
        assert_eq!(PoolSize::SampleScaled.resolve(200, 10), 10);
        assert_eq!(PoolSize::HalfOfVariables.resolve(200, 81), 40);
    }

    fn small_data(seed: u64, signal: bool) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, p) = (80, 6);
        let x: Vec<f64> = (0..n * p).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let e = rng.random::<f64>() - 0.5;
                if signal {
                    4.0 * x[i] * x[2 * n + i] + e
                } else {
                    e
                }
            })
            .collect();
        Dataset::from_column_major(n, p, x, y, Task::Regression, None).unwrap()
    }

    #[test]
    fn single_negative_tree_keeps_initial_weights() {
        // Search seeds for a pure-noise run whose only tree scores <= 0.
        let params = KingParams {
            n_trees: 1,
            n_iter: 1,
            max_depth: 2,
            ..KingParams::default()
        };
        let data = small_data(1, false);
        let mut found = false;
        for s in 0..50 {
            let seeds = SeedContext::new(s);
            let ctx = seeds.with_stage(Stage::KingIteration { king: 0, iteration: 0 });
            let mut f = build_forest(&data, 0, &[1.0; 6], &(0..6).collect::<Vec<_>>(), 2, &params.tree, 1, &ctx).unwrap();
            let v = forest_pvims(&mut f, &data, &params.pvim, &ctx).unwrap()[0];
            if v <= 0.0 {
                let r = run_kings_forests(&data, 0, &[1.0; 6], &params, &seeds, 0).unwrap();
                assert_eq!(r.weights, vec![1.0; 6]);
                found = true;
                break;
            }
        }
        assert!(found);
    }

    #[test]
    fn report_shape_and_invariants() {
        let data = small_data(2, true);
        let params = KingParams {
            n_trees: 20,
            max_depth: 3,
            n_iter: 3,
            pool_size: PoolSize::Fixed(4),
            n_top: 5,
            ..KingParams::default()
        };
        let r = run_kings_forests(&data, 0, &[1.0; 6], &params, &SeedContext::new(5), 0).unwrap();
        assert_eq!(r.profile.mean.len(), 3);
        assert_eq!(r.shortlists.len(), 2);
        assert!(r.candidate_pool.contains(&0));
        assert_eq!(r.candidate_pool.len(), 4);
        assert!(r.weights.iter().all(|w| *w >= 1.0));
        // x3 interacts with the King and should lead the weights after it
        assert_eq!(rank_variables(&r.weights)[..2], [0, 2]);
        for s in &r.shortlists {
            for m in Metric::ALL {
                let list = s.get(m);
                assert!(list.len() <= 5);
                assert!(list.iter().all(|rec| rec.vars[0] == 0 && rec.vars.len() == s.depth));
                assert!(list.windows(2).all(|w| compare_by(m, &w[0], &w[1]) != Ordering::Greater));
            }
        }
        let again = run_kings_forests(&data, 0, &[1.0; 6], &params, &SeedContext::new(5), 0).unwrap();
        assert_eq!(r, again);
    }
}
