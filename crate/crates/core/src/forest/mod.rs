//! King-rooted, depth-bounded CART trees and forests.
//!
//! Every tree in a King's forest splits the King at its root. Below the root
//! each node draws `mtry` candidates from the pool (minus the variables
//! already used on the path) with probability proportional to the current
//! weights, then takes the candidate and threshold with the largest impurity
//! decrease. No variable repeats along a root-to-leaf path, so a depth-`d`
//! path names `d` distinct variables.

mod sampling;
mod split;
mod tree;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SeedContext, Task};
use crate::error::{IkfError, Result};
use crate::{diagnostics, par};

pub use sampling::weighted_sample_without_replacement;
pub use split::{impurity_decrease, node_impurity, MIN_RELATIVE_DECREASE};
pub use tree::{Node, Tree};

use split::{best_threshold, SplitCandidate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mtry {
    /// `ceil(sqrt(|pool|))`.
    Auto,
    Fixed(usize),
}

impl Mtry {
    pub fn resolve(self, pool_size: usize) -> usize {
        match self {
            Mtry::Auto => (pool_size as f64).sqrt().ceil() as usize,
            Mtry::Fixed(k) => k,
        }
        .max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub mtry: Mtry,
    pub min_leaf: usize,
    /// Draw an `n`-sized bootstrap per tree. Without it every sample is
    /// in-bag and the out-of-bag set is empty.
    pub bootstrap: bool,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            mtry: Mtry::Auto,
            min_leaf: 5,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KingTree {
    pub tree: Tree,
    pub king: usize,
    /// Bootstrap draw, with repeats, in draw order.
    pub inbag: Vec<usize>,
    /// Samples absent from `inbag`, ascending.
    pub oob: Vec<usize>,
    /// King's permutation importance; zero until computed.
    pub pvim: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KingForest {
    pub trees: Vec<KingTree>,
    pub king: usize,
    pub max_depth: usize,
    pub candidate_pool: Vec<usize>,
    pub weights_used: Vec<f64>,
}

/// Ordered root path `vars` (starting with the King) and its two metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub vars: Vec<usize>,
    pub reproduction_count: usize,
    pub pvim_sum: f64,
}

impl PathRecord {
    pub fn depth(&self) -> usize {
        self.vars.len()
    }

    pub fn avg_pvim(&self) -> f64 {
        self.pvim_sum / self.reproduction_count as f64
    }

    /// Members as an ascending set.
    pub fn var_set(&self) -> Vec<usize> {
        let mut s = self.vars.clone();
        s.sort_unstable();
        s
    }
}

#[derive(Debug, Clone, Copy)]
enum RootRule {
    King(usize),
    Free,
}

fn validate(data: &Dataset, weights: &[f64], pool: &[usize], max_depth: usize, params: &TreeParams) -> Result<()> {
    if pool.is_empty() {
        return Err(IkfError::EmptyPool);
    }
    if weights.len() != data.p() {
        return Err(IkfError::InvalidParam(format!(
            "{} weights for {} variables",
            weights.len(),
            data.p()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(IkfError::InvalidParam("weights must be finite and nonnegative".into()));
    }
    if let Some(&v) = pool.iter().find(|&&v| v >= data.p()) {
        return Err(IkfError::InvalidParam(format!("pool variable {v} out of range")));
    }
    if max_depth < 1 {
        return Err(IkfError::InvalidParam("max_depth must be >= 1".into()));
    }
    if params.min_leaf < 1 {
        return Err(IkfError::InvalidParam("min_leaf must be >= 1".into()));
    }
    if data.n() < 2 * params.min_leaf {
        return Err(IkfError::InvalidParam(format!(
            "n = {} is below 2 * min_leaf = {}",
            data.n(),
            2 * params.min_leaf
        )));
    }
    Ok(())
}

/// Grows one King-rooted tree on a bootstrap sample.
pub fn build_tree<R: Rng + ?Sized>(
    data: &Dataset,
    king: usize,
    weights: &[f64],
    pool: &[usize],
    max_depth: usize,
    params: &TreeParams,
    rng: &mut R,
) -> Result<KingTree> {
    validate(data, weights, pool, max_depth, params)?;
    if !pool.contains(&king) {
        return Err(IkfError::InvalidParam(format!("King {king} is not in the candidate pool")));
    }
    let (tree, inbag, oob) = grow(data, RootRule::King(king), weights, pool, max_depth, params, rng);
    Ok(KingTree {
        tree,
        king,
        inbag,
        oob,
        pvim: 0.0,
    })
}

/// Grows an ordinary tree whose root is chosen like any other node.
/// Returns the tree and its out-of-bag samples.
pub fn build_free_tree<R: Rng + ?Sized>(
    data: &Dataset,
    weights: &[f64],
    pool: &[usize],
    max_depth: usize,
    params: &TreeParams,
    rng: &mut R,
) -> Result<(Tree, Vec<usize>)> {
    validate(data, weights, pool, max_depth, params)?;
    let (tree, _, oob) = grow(data, RootRule::Free, weights, pool, max_depth, params, rng);
    Ok((tree, oob))
}

/// Builds `n_trees` King-rooted trees; tree `j` draws from `seeds.stream(j)`.
#[allow(clippy::too_many_arguments)]
pub fn build_forest(
    data: &Dataset,
    king: usize,
    weights: &[f64],
    pool: &[usize],
    max_depth: usize,
    params: &TreeParams,
    n_trees: usize,
    seeds: &SeedContext,
) -> Result<KingForest> {
    if n_trees < 1 {
        return Err(IkfError::InvalidParam("forest size must be >= 1".into()));
    }
    let trees = par::try_map_range(n_trees, |j| {
        let mut rng = seeds.stream(j as u64);
        build_tree(data, king, weights, pool, max_depth, params, &mut rng)
    })?;
    Ok(KingForest {
        trees,
        king,
        max_depth,
        candidate_pool: pool.to_vec(),
        weights_used: weights.to_vec(),
    })
}

/// Aggregates the depth-`d` root paths of every tree by ordered variable
/// tuple. `pvim_sum` is left at zero. Records come back sorted by `vars`.
pub fn extract_paths(forest: &KingForest, d: usize) -> Vec<PathRecord> {
    let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for t in &forest.trees {
        for path in t.tree.depth_paths(d) {
            *counts.entry(path).or_insert(0) += 1;
        }
    }
    debug_assert!(
        d == 0 || counts.len() <= forest.trees.len() << (d - 1),
        "more distinct depth-{d} paths than N * 2^(d-1)"
    );
    counts
        .into_iter()
        .map(|(vars, reproduction_count)| PathRecord {
            vars,
            reproduction_count,
            pvim_sum: 0.0,
        })
        .collect()
}

fn grow<R: Rng + ?Sized>(
    data: &Dataset,
    root: RootRule,
    weights: &[f64],
    pool: &[usize],
    max_depth: usize,
    params: &TreeParams,
    rng: &mut R,
) -> (Tree, Vec<usize>, Vec<usize>) {
    let n = data.n();
    let inbag: Vec<usize> = if params.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut seen = vec![false; n];
    for &i in &inbag {
        seen[i] = true;
    }
    let oob: Vec<usize> = (0..n).filter(|&i| !seen[i]).collect();

    let mut grower = Grower {
        data,
        weights,
        pool,
        max_depth,
        min_leaf: params.min_leaf,
        mtry: params.mtry.resolve(pool.len()),
        nodes: Vec::new(),
        pairs: Vec::with_capacity(n),
        ancestors: Vec::with_capacity(max_depth),
    };
    grower.grow_node(&inbag, 1, root, rng);
    diagnostics::tree_built();
    (Tree::from_arena(grower.nodes), inbag, oob)
}

struct Grower<'a> {
    data: &'a Dataset,
    weights: &'a [f64],
    pool: &'a [usize],
    max_depth: usize,
    min_leaf: usize,
    mtry: usize,
    nodes: Vec<Node>,
    pairs: Vec<(f64, f64)>,
    ancestors: Vec<usize>,
}

impl Grower<'_> {
    fn grow_node<R: Rng + ?Sized>(&mut self, samples: &[usize], depth: usize, root: RootRule, rng: &mut R) -> usize {
        let at = self.nodes.len();
        let y = self.data.y();
        let leaf_value = leaf_value(samples.iter().map(|&i| y[i]), samples.len(), self.data.task());
        self.nodes.push(Node::Leaf {
            value: leaf_value,
            depth,
        });

        if depth > self.max_depth || samples.len() < 2 * self.min_leaf || is_pure(samples, y) {
            return at;
        }

        let candidates = match (depth, root) {
            (1, RootRule::King(king)) => vec![king],
            _ => {
                let available: Vec<usize> = self
                    .pool
                    .iter()
                    .copied()
                    .filter(|v| !self.ancestors.contains(v))
                    .collect();
                weighted_sample_without_replacement(&available, self.weights, self.mtry, rng)
            }
        };

        let mut best: Option<SplitCandidate> = None;
        for &var in &candidates {
            let column = self.data.column(var);
            self.pairs.clear();
            self.pairs.extend(samples.iter().map(|&i| (column[i], y[i])));
            if let Some((decrease, threshold)) = best_threshold(&mut self.pairs, self.min_leaf, self.data.task()) {
                let cand = SplitCandidate {
                    var,
                    threshold,
                    decrease,
                };
                if best.is_none_or(|b| cand.beats(&b)) {
                    best = Some(cand);
                }
            }
        }
        let Some(best) = best else {
            return at;
        };
        let parent: Vec<f64> = samples.iter().map(|&i| y[i]).collect();
        if best.decrease <= MIN_RELATIVE_DECREASE * node_impurity(&parent, self.data.task()) {
            return at;
        }

        let column = self.data.column(best.var);
        let (left, right): (Vec<usize>, Vec<usize>) =
            samples.iter().partition(|&&i| column[i] < best.threshold);
        self.ancestors.push(best.var);
        let l = self.grow_node(&left, depth + 1, root, rng);
        let r = self.grow_node(&right, depth + 1, root, rng);
        self.ancestors.pop();
        self.nodes[at] = Node::Split {
            var: best.var,
            threshold: best.threshold,
            depth,
            left: l,
            right: r,
        };
        at
    }
}

fn is_pure(samples: &[usize], y: &[f64]) -> bool {
    let first = y[samples[0]];
    samples.iter().all(|&i| y[i] == first)
}

/// Mean (regression) or majority class with ties to 0 (classification).
pub(crate) fn leaf_value(values: impl Iterator<Item = f64>, count: usize, task: Task) -> f64 {
    let sum: f64 = values.sum();
    match task {
        Task::Regression => sum / count as f64,
        Task::BinaryClassification => f64::from(2.0 * sum > count as f64),
    }
}
