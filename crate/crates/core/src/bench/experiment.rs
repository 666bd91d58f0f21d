//! Seeded multi-replication runs of one method on one scenario.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dcsis::dc_sis;
use super::metrics::{interaction_hit, large_model_size, mrs, nearest_rank, selected, small_model_size, QUANTILES};
use super::scenario::{generate, Scenario, Truth};
use crate::data::SeedContext;
use crate::error::{IkfError, Result};
use crate::ikf::{run_ikf, IkfParams, IkfReport};
use crate::par;
use crate::report::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ikf,
    DcSis,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ikf => "ikf",
            Method::DcSis => "dcsis",
        })
    }
}

impl FromStr for Method {
    type Err = IkfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "ikf" => Ok(Method::Ikf),
            "dcsis" => Ok(Method::DcSis),
            _ => Err(IkfError::InvalidParam(format!("unknown method `{s}` (expected ikf or dcsis)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub method: Method,
    pub params: IkfParams,
    pub replications: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub replication: usize,
    pub ranking: Vec<usize>,
    pub mrs: usize,
    /// One flag per true interaction; empty for methods without interactions.
    pub interaction_hits: Vec<bool>,
    pub all_interactions: Option<bool>,
    /// Per active variable: within the smaller / larger screening size.
    pub selected_small: Vec<bool>,
    pub selected_large: Vec<bool>,
    #[serde(skip)]
    pub report: Option<IkfReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mrs_quantiles: [usize; 5],
    /// Per-interaction recovery rates; empty without interactions.
    pub irr: Vec<f64>,
    pub orr: Option<f64>,
    pub ps_small: Vec<f64>,
    pub ps_large: Vec<f64>,
    pub pa_small: f64,
    pub pa_large: f64,
    pub small_size: usize,
    pub large_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub truth: Truth,
    pub replications: Vec<ReplicationResult>,
    pub summary: Summary,
}

fn run_one(config: &ExperimentConfig, truth: &Truth, r: usize) -> Result<ReplicationResult> {
    let seeds = SeedContext::new(config.master_seed).with_replication(r as u64);
    let data = generate(&config.scenario, &seeds)?;
    let (ranking, report) = match config.method {
        Method::Ikf => {
            let report = run_ikf(&data, &config.params, &seeds)?;
            (report.ranking.clone(), Some(report))
        }
        Method::DcSis => (dc_sis(&data), None),
    };
    let n = data.n();
    let (small, large) = (small_model_size(n), large_model_size(n));
    let interaction_hits: Vec<bool> = match &report {
        Some(rep) => truth.interactions.iter().map(|t| interaction_hit(rep, t)).collect(),
        None => Vec::new(),
    };
    Ok(ReplicationResult {
        replication: r,
        mrs: mrs(&ranking, &truth.active)?,
        all_interactions: report.as_ref().map(|_| interaction_hits.iter().all(|&h| h)),
        interaction_hits,
        selected_small: truth.active.iter().map(|&v| selected(&ranking, v, small)).collect(),
        selected_large: truth.active.iter().map(|&v| selected(&ranking, v, large)).collect(),
        ranking,
        report,
    })
}

fn rate(flags: impl Iterator<Item = bool>, total: usize) -> f64 {
    flags.filter(|&f| f).count() as f64 / total as f64
}

fn summarize(reps: &[ReplicationResult], truth: &Truth, n: usize) -> Summary {
    let r = reps.len();
    let mrs_values: Vec<usize> = reps.iter().map(|x| x.mrs).collect();
    let has_interactions = reps.iter().all(|x| x.all_interactions.is_some());
    let per_var = |pick: fn(&ReplicationResult) -> &Vec<bool>| -> Vec<f64> {
        (0..truth.active.len())
            .map(|i| rate(reps.iter().map(|x| pick(x)[i]), r))
            .collect()
    };
    Summary {
        mrs_quantiles: QUANTILES.map(|q| nearest_rank(&mrs_values, q)),
        irr: if has_interactions {
            (0..truth.interactions.len())
                .map(|i| rate(reps.iter().map(|x| x.interaction_hits[i]), r))
                .collect()
        } else {
            Vec::new()
        },
        orr: has_interactions.then(|| rate(reps.iter().map(|x| x.all_interactions == Some(true)), r)),
        ps_small: per_var(|x| &x.selected_small),
        ps_large: per_var(|x| &x.selected_large),
        pa_small: rate(reps.iter().map(|x| x.selected_small.iter().all(|&s| s)), r),
        pa_large: rate(reps.iter().map(|x| x.selected_large.iter().all(|&s| s)), r),
        small_size: small_model_size(n),
        large_size: large_model_size(n),
    }
}

/// Runs `replications` independent replications. Replication `r` uses the
/// stream family `(master_seed, r)` for both data and method, so two methods
/// with the same master seed see the same datasets.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    if config.replications < 1 {
        return Err(IkfError::InvalidParam("replications must be >= 1".into()));
    }
    config.scenario.validate()?;
    if config.method == Method::Ikf {
        config.params.validate()?;
    }
    let truth = config.scenario.truth();
    let replications = par::try_map_range(config.replications, |r| run_one(config, &truth, r))?;
    let summary = summarize(&replications, &truth, config.scenario.n);
    Ok(ExperimentResult {
        config: config.clone(),
        truth,
        replications,
        summary,
    })
}

fn interaction_label(vars: &[usize]) -> String {
    vars.iter().map(|v| format!("x{}", v + 1)).collect::<Vec<_>>().join(":")
}

fn to_csv(rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let err = |e: String| IkfError::Csv {
        path: PathBuf::new(),
        message: e,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(|e| err(e.to_string()))?;
    }
    w.into_inner().map_err(|e| err(e.to_string()))
}

impl ExperimentResult {
    fn label(&self) -> (String, String) {
        (self.config.scenario.id.to_string(), self.config.method.to_string())
    }

    pub fn mrs_csv(&self) -> Result<Vec<u8>> {
        let (scenario, method) = self.label();
        let mut rows = vec![["scenario", "method", "q05", "q25", "q50", "q75", "q95"].map(String::from).to_vec()];
        let mut row = vec![scenario, method];
        row.extend(self.summary.mrs_quantiles.iter().map(usize::to_string));
        rows.push(row);
        to_csv(rows)
    }

    pub fn interactions_csv(&self) -> Result<Vec<u8>> {
        let (scenario, method) = self.label();
        let mut rows = vec![["scenario", "method", "interaction", "rate"].map(String::from).to_vec()];
        for (t, irr) in self.truth.interactions.iter().zip(&self.summary.irr) {
            rows.push(vec![scenario.clone(), method.clone(), interaction_label(t), irr.to_string()]);
        }
        if let Some(orr) = self.summary.orr {
            rows.push(vec![scenario, method, "all".into(), orr.to_string()]);
        }
        to_csv(rows)
    }

    pub fn selection_csv(&self) -> Result<Vec<u8>> {
        let (scenario, method) = self.label();
        let s = &self.summary;
        let mut rows = vec![["scenario", "method", "variable", "size", "rate"].map(String::from).to_vec()];
        for (size, ps, pa) in [(s.small_size, &s.ps_small, s.pa_small), (s.large_size, &s.ps_large, s.pa_large)] {
            for (&v, rate) in self.truth.active.iter().zip(ps) {
                rows.push(vec![scenario.clone(), method.clone(), format!("x{}", v + 1), size.to_string(), rate.to_string()]);
            }
            rows.push(vec![scenario.clone(), method.clone(), "all".into(), size.to_string(), pa.to_string()]);
        }
        to_csv(rows)
    }

    pub fn replications_csv(&self) -> Result<Vec<u8>> {
        let mut rows = vec![["replication", "mrs", "all_interactions", "top10"].map(String::from).to_vec()];
        for r in &self.replications {
            rows.push(vec![
                r.replication.to_string(),
                r.mrs.to_string(),
                r.all_interactions.map_or(String::new(), |b| b.to_string()),
                r.ranking.iter().take(10).map(|v| format!("x{}", v + 1)).collect::<Vec<_>>().join(" "),
            ]);
        }
        to_csv(rows)
    }

    pub fn manifest_json(&self) -> Result<String> {
        let manifest = serde_json::json!({
            "scenario": self.config.scenario,
            "method": self.config.method,
            "replications": self.config.replications,
            "master_seed": self.config.master_seed,
            "params": self.config.params,
            "truth": self.truth,
            "summary": self.summary,
            "build": {
                "package": env!("CARGO_PKG_NAME"),
                "version": env!("CARGO_PKG_VERSION"),
                "commit": option_env!("IKF_BUILD_COMMIT"),
            },
        });
        let mut s = serde_json::to_string_pretty(&manifest)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes every table plus `manifest.json` into `dir`.
    pub fn write_outputs(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| IkfError::io(dir, e))?;
        let files = [
            ("mrs_quantiles.csv", self.mrs_csv()?),
            ("interaction_recovery.csv", self.interactions_csv()?),
            ("selection_rates.csv", self.selection_csv()?),
            ("replications.csv", self.replications_csv()?),
            ("manifest.json", self.manifest_json()?.into_bytes()),
        ];
        let mut written = Vec::new();
        for (name, bytes) in files {
            let path = dir.join(name);
            write_atomic(&path, &bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}
