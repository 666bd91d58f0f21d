//! The outer loop: choose a King, run its forests, accumulate weights,
//! shrink the survived set, repeat. Then infer orders per King and type the
//! recovered interactions.

mod typing;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SeedContext, Stage, PVIM_STREAM};
use crate::error::{IkfError, Result};
use crate::forest::{build_free_tree, PathRecord};
use crate::kings::{rank_variables, run_kings_forests, shortlist, KingParams, KingReport, Metric};
use crate::par;
use crate::pvim::{permutation_importance, EvalSource};

pub use typing::{classify_interaction, infer_orders, InteractionKind, TypedInteraction};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FirstKing {
    /// A variable given by name.
    Named(String),
    /// Uniform over all variables.
    Random,
    /// Top variable by permutation importance in an ordinary forest.
    Auto,
}

/// A threshold either fixed or scaled by a reference magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Threshold {
    Absolute(f64),
    /// Fraction of `max(0, reference)`.
    Relative(f64),
}

impl Threshold {
    pub fn resolve(self, reference: f64) -> f64 {
        match self {
            Threshold::Absolute(v) => v,
            Threshold::Relative(f) => f * reference.max(0.0),
        }
    }

    fn is_valid(self) -> bool {
        match self {
            Threshold::Absolute(v) | Threshold::Relative(v) => v.is_finite() && v >= 0.0,
        }
    }
}

/// Which variables each King's weights are ranked over when forming the
/// surviving set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SurvivalRanking {
    /// Keep the top `ceil((1 - alpha) p)` of all variables.
    AllVariables,
    /// Keep the top `ceil((1 - alpha) |S|)` of the current survivors.
    Survivors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IkfParams {
    /// Fraction of variables dropped per King.
    pub alpha: f64,
    /// Stop once the survived set has at most this many variables.
    /// `None` means `max(10, ceil(0.02 p))`.
    pub stop_size: Option<usize>,
    pub max_kings: Option<usize>,
    pub first_king: FirstKing,
    pub king: KingParams,
    /// Main-effect threshold, relative to the largest depth-1 King's
    /// importance across Kings.
    pub tau_main: Threshold,
    /// Direction threshold on a path's average importance.
    pub tau_dir: f64,
    /// Order-inference threshold, relative to each King's largest profile value.
    pub tau_order: Threshold,
    pub survival: SurvivalRanking,
}

impl Default for IkfParams {
    fn default() -> Self {
        IkfParams {
            alpha: 0.5,
            stop_size: None,
            max_kings: None,
            first_king: FirstKing::Auto,
            king: KingParams::default(),
            tau_main: Threshold::Relative(0.25),
            tau_dir: 1e-6,
            tau_order: Threshold::Relative(0.1),
            survival: SurvivalRanking::AllVariables,
        }
    }
}

impl IkfParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(IkfError::InvalidParam(m.into()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.stop_size == Some(0) {
            return bad("stopping size must be >= 1");
        }
        if self.max_kings == Some(0) {
            return bad("max_kings must be >= 1");
        }
        if !self.tau_main.is_valid() || !self.tau_order.is_valid() || !(self.tau_dir >= 0.0) || !self.tau_dir.is_finite() {
            return bad("thresholds must be finite and nonnegative");
        }
        self.king.validate()
    }

    pub fn resolved_stop_size(&self, p: usize) -> usize {
        self.stop_size
            .unwrap_or_else(|| 10.max((0.02 * p as f64).ceil() as usize))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KingOrders {
    pub king: usize,
    pub orders: Vec<usize>,
    pub tau: f64,
}

/// Every King's shortlist for one depth and metric, concatenated in King order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcatenatedPaths {
    pub depth: usize,
    pub metric: Metric,
    pub records: Vec<PathRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IkfReport {
    /// Accumulated weights over all Kings.
    pub weights: Vec<f64>,
    pub ranking: Vec<usize>,
    pub kings: Vec<KingReport>,
    /// `S_0` (all variables) followed by the set after each King, ascending.
    pub survived_trace: Vec<Vec<usize>>,
    pub paths: Vec<ConcatenatedPaths>,
    pub orders: Vec<KingOrders>,
    pub typed_interactions: Vec<TypedInteraction>,
    /// Shortlist length used for the merged lists.
    pub n_top: usize,
}

impl IkfReport {
    pub fn king_order(&self) -> Vec<usize> {
        self.kings.iter().map(|k| k.king).collect()
    }

    pub fn concatenated(&self, depth: usize, metric: Metric) -> &[PathRecord] {
        self.paths
            .iter()
            .find(|c| c.depth == depth && c.metric == metric)
            .map_or(&[], |c| &c.records)
    }

    /// Best `n_top` records across all Kings for one depth and metric.
    pub fn merged_top(&self, depth: usize, metric: Metric) -> Vec<PathRecord> {
        shortlist(self.concatenated(depth, metric), metric, self.n_top)
    }
}

/// Picks the first King.
pub fn choose_first_king(data: &Dataset, params: &IkfParams, seeds: &SeedContext) -> Result<usize> {
    let ctx = seeds.with_stage(Stage::FirstKing);
    match &params.first_king {
        FirstKing::Named(name) => data
            .index_of(name)
            .ok_or_else(|| IkfError::UnknownVariable(name.clone())),
        FirstKing::Random => Ok(ctx.stream(0).random_range(0..data.p())),
        FirstKing::Auto => {
            let importance = vanilla_importance(data, &params.king, &ctx)?;
            Ok(rank_variables(&importance)[0])
        }
    }
}

/// Mean out-of-bag permutation importance of every variable over an
/// ordinary forest: uniform weights, free root, depth bounded only by the
/// leaf size.
fn vanilla_importance(data: &Dataset, params: &KingParams, ctx: &SeedContext) -> Result<Vec<f64>> {
    let p = data.p();
    let all: Vec<usize> = (0..p).collect();
    let ones = vec![1.0; p];
    let per_tree = par::try_map_range(params.n_trees, |j| -> Result<Vec<f64>> {
        let mut rng = ctx.stream(j as u64);
        let (tree, oob) = build_free_tree(data, &ones, &all, data.n(), &params.tree, &mut rng)?;
        let eval = match &params.pvim.eval_source {
            EvalSource::Oob => oob,
            EvalSource::Holdout(rows) => rows.clone(),
        };
        let mut scores = vec![0.0; p];
        if eval.is_empty() {
            return Ok(scores);
        }
        let mut rng = ctx.stream(PVIM_STREAM + j as u64);
        for v in tree.split_variables() {
            scores[v] = permutation_importance(&tree, data, v, &eval, params.pvim.n_permutations, &mut rng)?;
        }
        Ok(scores)
    })?;
    let mut total = vec![0.0; p];
    for scores in &per_tree {
        for (t, s) in total.iter_mut().zip(scores) {
            *t += s;
        }
    }
    Ok(total.into_iter().map(|t| t / params.n_trees as f64).collect())
}

fn survivors_of(w: &[f64], previous: &[usize], alpha: f64, survival: SurvivalRanking) -> Vec<usize> {
    let keep = |m: usize| ((1.0 - alpha) * m as f64).ceil() as usize;
    let mut kept: Vec<usize> = match survival {
        SurvivalRanking::AllVariables => {
            let top: BTreeSet<usize> = rank_variables(w).into_iter().take(keep(w.len())).collect();
            previous.iter().copied().filter(|v| top.contains(v)).collect()
        }
        SurvivalRanking::Survivors => {
            let mut s = previous.to_vec();
            s.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
            s.truncate(keep(previous.len()));
            s
        }
    };
    kept.sort_unstable();
    kept
}

/// Runs the full iterative procedure. At least one King is always run.
pub fn run_ikf(data: &Dataset, params: &IkfParams, seeds: &SeedContext) -> Result<IkfReport> {
    params.validate()?;
    let p = data.p();
    let stop_size = params.resolved_stop_size(p);
    let ones = vec![1.0; p];

    let mut king = choose_first_king(data, params, seeds)?;
    let mut total = vec![0.0; p];
    let mut is_king = vec![false; p];
    let mut survived: Vec<usize> = (0..p).collect();
    let mut trace = vec![survived.clone()];
    let mut kings: Vec<KingReport> = Vec::new();

    loop {
        let report = run_kings_forests(data, king, &ones, &params.king, seeds, kings.len() as u32)?;
        let next_survived = survivors_of(&report.weights, &survived, params.alpha, params.survival);
        debug_assert!(next_survived.iter().all(|v| survived.binary_search(v).is_ok()));
        survived = next_survived;
        trace.push(survived.clone());
        for (t, w) in total.iter_mut().zip(&report.weights) {
            *t += w;
        }
        is_king[king] = true;
        kings.push(report);

        let capped = params.max_kings.is_some_and(|m| kings.len() >= m);
        if survived.len() <= stop_size || capped {
            break;
        }
        match (0..p)
            .filter(|&v| !is_king[v])
            .max_by(|&a, &b| total[a].total_cmp(&total[b]).then(b.cmp(&a)))
        {
            Some(next) => king = next,
            None => break,
        }
    }

    let d_max = params.king.max_depth;
    let paths = (2..=d_max)
        .flat_map(|d| Metric::ALL.map(|m| (d, m)))
        .map(|(depth, metric)| ConcatenatedPaths {
            depth,
            metric,
            records: kings.iter().flat_map(|k| k.shortlist(depth, metric).to_vec()).collect(),
        })
        .collect();

    let orders = kings
        .iter()
        .map(|k| {
            let peak = k.pvim_profile().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let tau = params.tau_order.resolve(peak);
            KingOrders {
                king: k.king,
                orders: infer_orders(k.pvim_profile(), tau),
                tau,
            }
        })
        .collect();

    let mut report = IkfReport {
        ranking: rank_variables(&total),
        weights: total,
        kings,
        survived_trace: trace,
        paths,
        orders,
        typed_interactions: Vec::new(),
        n_top: params.king.n_top,
    };
    report.typed_interactions = type_interactions(&report, params.tau_main, params.tau_dir);
    Ok(report)
}

/// Types every variable set found in a merged top list.
///
/// Candidates come from the merged best-`n_top` lists of each depth and
/// metric, in order of first appearance. A member's direction evidence is the
/// largest average importance among any King's shortlisted paths over the
/// same set that start with that member.
pub fn type_interactions(report: &IkfReport, tau_main: Threshold, tau_dir: f64) -> Vec<TypedInteraction> {
    let main_effect: BTreeMap<usize, f64> = report
        .kings
        .iter()
        .map(|k| (k.king, k.pvim_profile().first().copied().unwrap_or(0.0)))
        .collect();
    let peak_main = main_effect.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let tau_main = tau_main.resolve(peak_main);

    let depths: BTreeSet<usize> = report.paths.iter().map(|c| c.depth).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &d in &depths {
        let mut direction: BTreeMap<(Vec<usize>, usize), f64> = BTreeMap::new();
        for m in Metric::ALL {
            for r in report.concatenated(d, m) {
                let e = direction.entry((r.var_set(), r.vars[0])).or_insert(f64::NEG_INFINITY);
                *e = e.max(r.avg_pvim());
            }
        }
        for m in Metric::ALL {
            for r in report.merged_top(d, m) {
                let set = r.var_set();
                if !seen.insert(set.clone()) {
                    continue;
                }
                let dirs: Vec<Option<f64>> = set.iter().map(|&v| direction.get(&(set.clone(), v)).copied()).collect();
                let mains: Vec<Option<f64>> = set.iter().map(|v| main_effect.get(v).copied()).collect();
                out.push(classify_interaction(&set, &dirs, &mains, tau_main, tau_dir));
            }
        }
    }
    out
}
