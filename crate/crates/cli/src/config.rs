//! Flat `key = value` configuration.
//!
//! Layers, lowest first: built-in defaults, the optional preset, the config
//! file, `--set KEY=VALUE` overrides, then dedicated flags.

use std::fmt;
use std::path::{Path, PathBuf};

use ikf_core::bench::{Method, ScenarioId};
use ikf_core::forest::Mtry;
use ikf_core::ikf::{FirstKing, IkfParams, SurvivalRanking, Threshold};
use ikf_core::kings::{KingParams, PathPvimMode, PoolSize};
use ikf_core::pvim::PvimParams;
use ikf_core::{Task, TreeParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Res<T> = std::result::Result<T, ConfigError>;

/// Canonical keys with their documentation, in output order.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "master seed"),
    ("threads", "worker threads, 0 = all cores"),
    ("output_dir", "directory for reports"),
    ("response", "response column name or 0-based index"),
    ("task", "regression | classification"),
    ("n_trees", "trees per forest"),
    ("max_depth", "maximum tree depth D; auto = 4 for a-scenarios, 5 for b-scenarios, 4 otherwise"),
    ("n_iter", "weight-update iterations per King"),
    ("n_candidates", "candidate pool size: auto = floor(n / (2 ln n)), half = floor(p / 2), or a count"),
    ("n_top", "shortlist length per depth and metric"),
    ("mtry", "candidates per split: auto = ceil(sqrt(pool)), or a count"),
    ("min_leaf", "minimum samples per leaf"),
    ("bootstrap", "draw a bootstrap sample per tree"),
    ("n_permutations", "permutations averaged per tree importance"),
    ("path_pvim", "occurrence | tree: how a tree's importance enters a path's sum"),
    ("alpha", "fraction of variables dropped per King"),
    ("stop_size", "stop when the survived set is this small; auto = max(10, ceil(0.02 p))"),
    ("max_kings", "cap on the number of Kings; none = no cap"),
    ("first_king", "auto | random | a variable name"),
    ("survival", "all | survivors: which variables each King's weights rank"),
    ("tau_main", "main-effect threshold: a fraction of the largest depth-1 King's importance, or abs:VALUE"),
    ("tau_dir", "direction threshold on a path's average importance"),
    ("tau_order", "order threshold: a fraction of each King's largest importance, or abs:VALUE"),
    ("scenario", "simulation scenario a1..a5, b1..b5"),
    ("n", "simulated sample size"),
    ("p", "simulated variable count"),
    ("scale", "simulated signal scale"),
    ("replications", "benchmark replications"),
    ("method", "ikf | dcsis"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub threads: usize,
    pub output_dir: PathBuf,
    pub response: String,
    pub task: Task,
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub n_iter: usize,
    pub n_candidates: PoolSize,
    pub n_top: usize,
    pub mtry: Mtry,
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub n_permutations: usize,
    pub path_pvim: PathPvimMode,
    pub alpha: f64,
    pub stop_size: Option<usize>,
    pub max_kings: Option<usize>,
    pub first_king: FirstKing,
    pub survival: SurvivalRanking,
    pub tau_main: Threshold,
    pub tau_dir: f64,
    pub tau_order: Threshold,
    pub scenario: ScenarioId,
    pub n: usize,
    pub p: usize,
    pub scale: f64,
    pub replications: usize,
    pub method: Method,
}

impl Default for Config {
    fn default() -> Self {
        let ikf = IkfParams::default();
        let king = &ikf.king;
        Config {
            seed: 0,
            threads: 0,
            output_dir: PathBuf::from("ikf-output"),
            response: "y".into(),
            task: Task::Regression,
            n_trees: king.n_trees,
            max_depth: None,
            n_iter: king.n_iter,
            n_candidates: king.pool_size,
            n_top: king.n_top,
            mtry: king.tree.mtry,
            min_leaf: king.tree.min_leaf,
            bootstrap: king.tree.bootstrap,
            n_permutations: king.pvim.n_permutations,
            path_pvim: king.path_pvim,
            alpha: ikf.alpha,
            stop_size: ikf.stop_size,
            max_kings: ikf.max_kings,
            first_king: ikf.first_king.clone(),
            survival: ikf.survival,
            tau_main: ikf.tau_main,
            tau_dir: ikf.tau_dir,
            tau_order: ikf.tau_order,
            scenario: ScenarioId::A1,
            n: 200,
            p: 500,
            scale: 2.0,
            replications: 100,
            method: Method::Ikf,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Res<T> {
    value
        .parse()
        .map_err(|_| ConfigError(format!("invalid value {value:?} for `{key}`")))
}

fn auto_or<T: std::str::FromStr>(key: &str, value: &str, auto: &str) -> Res<Option<T>> {
    if value.eq_ignore_ascii_case(auto) {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

fn threshold(key: &str, value: &str) -> Res<Threshold> {
    match value.strip_prefix("abs:") {
        Some(v) => num(key, v).map(Threshold::Absolute),
        None => num(key, value).map(Threshold::Relative),
    }
}

fn show_threshold(t: Threshold) -> String {
    match t {
        Threshold::Absolute(v) => format!("abs:{v}"),
        Threshold::Relative(v) => v.to_string(),
    }
}

impl Config {
    /// Settings for high-dimensional data with few samples and weak signals.
    pub fn apply_bio_profile(&mut self) {
        self.n_trees = 200;
        self.max_depth = Some(5);
        self.n_iter = 6;
        self.alpha = 0.2;
        self.n_candidates = PoolSize::HalfOfVariables;
        self.n_top = 30;
    }

    pub fn set(&mut self, key: &str, value: &str) -> Res<()> {
        let value = value.trim();
        match key.trim() {
            "seed" => self.seed = num(key, value)?,
            "threads" => self.threads = num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "response" => self.response = value.to_string(),
            "task" => self.task = value.parse().map_err(|_| ConfigError(format!("invalid task {value:?}")))?,
            "n_trees" => self.n_trees = num(key, value)?,
            "max_depth" => self.max_depth = auto_or(key, value, "auto")?,
            "n_iter" => self.n_iter = num(key, value)?,
            "n_candidates" => {
                self.n_candidates = match value {
                    "auto" => PoolSize::SampleScaled,
                    "half" => PoolSize::HalfOfVariables,
                    v => PoolSize::Fixed(num(key, v)?),
                }
            }
            "n_top" => self.n_top = num(key, value)?,
            "mtry" => self.mtry = auto_or(key, value, "auto")?.map_or(Mtry::Auto, Mtry::Fixed),
            "min_leaf" => self.min_leaf = num(key, value)?,
            "bootstrap" => self.bootstrap = num(key, value)?,
            "n_permutations" => self.n_permutations = num(key, value)?,
            "path_pvim" => {
                self.path_pvim = match value {
                    "occurrence" => PathPvimMode::PerOccurrence,
                    "tree" => PathPvimMode::PerTree,
                    _ => return Err(ConfigError(format!("invalid value {value:?} for `path_pvim`"))),
                }
            }
            "alpha" => self.alpha = num(key, value)?,
            "stop_size" => self.stop_size = auto_or(key, value, "auto")?,
            "max_kings" => self.max_kings = auto_or(key, value, "none")?,
            "first_king" => {
                self.first_king = match value {
                    "auto" => FirstKing::Auto,
                    "random" => FirstKing::Random,
                    "" => return Err(ConfigError("empty `first_king`".into())),
                    name => FirstKing::Named(name.to_string()),
                }
            }
            "survival" => {
                self.survival = match value {
                    "all" => SurvivalRanking::AllVariables,
                    "survivors" => SurvivalRanking::Survivors,
                    _ => return Err(ConfigError(format!("invalid value {value:?} for `survival`"))),
                }
            }
            "tau_main" => self.tau_main = threshold(key, value)?,
            "tau_dir" => self.tau_dir = num(key, value)?,
            "tau_order" => self.tau_order = threshold(key, value)?,
            "scenario" => self.scenario = value.parse().map_err(|e| ConfigError(format!("{e}")))?,
            "n" => self.n = num(key, value)?,
            "p" => self.p = num(key, value)?,
            "scale" => self.scale = num(key, value)?,
            "replications" => self.replications = num(key, value)?,
            "method" => self.method = value.parse().map_err(|e| ConfigError(format!("{e}")))?,
            other => return Err(ConfigError(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `KEY=VALUE`.
    pub fn set_pair(&mut self, pair: &str) -> Res<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("expected KEY=VALUE, got {pair:?}")))?;
        self.set(k, v)
    }

    /// Applies every `key = value` line of `text`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Res<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("{origin}:{}: expected `key = value`", i + 1)))?;
            self.set(k, v)
                .map_err(|e| ConfigError(format!("{origin}:{}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Res<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn get(&self, key: &str) -> String {
        match key {
            "seed" => self.seed.to_string(),
            "threads" => self.threads.to_string(),
            "output_dir" => self.output_dir.display().to_string(),
            "response" => self.response.clone(),
            "task" => self.task.to_string(),
            "n_trees" => self.n_trees.to_string(),
            "max_depth" => self.max_depth.map_or("auto".into(), |d| d.to_string()),
            "n_iter" => self.n_iter.to_string(),
            "n_candidates" => match self.n_candidates {
                PoolSize::SampleScaled => "auto".into(),
                PoolSize::HalfOfVariables => "half".into(),
                PoolSize::Fixed(k) => k.to_string(),
            },
            "n_top" => self.n_top.to_string(),
            "mtry" => match self.mtry {
                Mtry::Auto => "auto".into(),
                Mtry::Fixed(k) => k.to_string(),
            },
            "min_leaf" => self.min_leaf.to_string(),
            "bootstrap" => self.bootstrap.to_string(),
            "n_permutations" => self.n_permutations.to_string(),
            "path_pvim" => match self.path_pvim {
                PathPvimMode::PerOccurrence => "occurrence".into(),
                PathPvimMode::PerTree => "tree".into(),
            },
            "alpha" => self.alpha.to_string(),
            "stop_size" => self.stop_size.map_or("auto".into(), |k| k.to_string()),
            "max_kings" => self.max_kings.map_or("none".into(), |k| k.to_string()),
            "first_king" => match &self.first_king {
                FirstKing::Auto => "auto".into(),
                FirstKing::Random => "random".into(),
                FirstKing::Named(n) => n.clone(),
            },
            "survival" => match self.survival {
                SurvivalRanking::AllVariables => "all".into(),
                SurvivalRanking::Survivors => "survivors".into(),
            },
            "tau_main" => show_threshold(self.tau_main),
            "tau_dir" => self.tau_dir.to_string(),
            "tau_order" => show_threshold(self.tau_order),
            "scenario" => self.scenario.to_string(),
            "n" => self.n.to_string(),
            "p" => self.p.to_string(),
            "scale" => self.scale.to_string(),
            "replications" => self.replications.to_string(),
            "method" => self.method.to_string(),
            other => unreachable!("no config key `{other}`"),
        }
    }

    /// The full document, one documented key per line. Keys in `skip` are
    /// left out.
    pub fn render(&self, skip: &[&str]) -> String {
        let mut out = String::new();
        for (key, doc) in KEYS {
            if skip.contains(key) {
                continue;
            }
            out.push_str(&format!("# {doc}\n{key} = {}\n", self.get(key)));
        }
        out
    }

    pub fn ikf_params(&self, default_depth: usize) -> IkfParams {
        IkfParams {
            alpha: self.alpha,
            stop_size: self.stop_size,
            max_kings: self.max_kings,
            first_king: self.first_king.clone(),
            king: KingParams {
                n_trees: self.n_trees,
                max_depth: self.max_depth.unwrap_or(default_depth),
                n_iter: self.n_iter,
                pool_size: self.n_candidates,
                n_top: self.n_top,
                tree: TreeParams {
                    mtry: self.mtry,
                    min_leaf: self.min_leaf,
                    bootstrap: self.bootstrap,
                },
                pvim: PvimParams {
                    n_permutations: self.n_permutations,
                    ..PvimParams::default()
                },
                path_pvim: self.path_pvim,
            },
            tau_main: self.tau_main,
            tau_dir: self.tau_dir,
            tau_order: self.tau_order,
            survival: self.survival,
        }
    }
}
