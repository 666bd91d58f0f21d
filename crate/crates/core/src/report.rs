//! Serialized forms of a run: a name-keyed JSON document and flat CSV tables.
//! The CSVs are rendered from the document, so they can be regenerated from a
//! saved JSON file alone.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{IkfError, Result};
use crate::forest::PathRecord;
use crate::ikf::{IkfReport, InteractionKind};
use crate::kings::Metric;

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IkfError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| IkfError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| IkfError::io(path, e))?;
    tmp.persist(path).map_err(|e| IkfError::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEntry {
    pub vars: Vec<String>,
    pub count: usize,
    pub pvim_sum: f64,
    pub avg_pvim: f64,
}

/// `depth -> metric -> ranked entries`.
pub type PathTable = BTreeMap<String, BTreeMap<String, Vec<PathEntry>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KingDocument {
    pub king: String,
    pub weights: Vec<f64>,
    pub candidate_pool: Vec<String>,
    pub pvim_profile: Vec<f64>,
    pub pvim_profile_sum: Vec<f64>,
    pub orders: Vec<usize>,
    pub order_tau: f64,
    pub shortlists: PathTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedVariable {
    pub variable: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEntry {
    pub vars: Vec<String>,
    pub order: usize,
    pub kind: InteractionKind,
    pub dominant: Vec<String>,
    pub low_confidence: bool,
    pub direction_pvims: Vec<Option<f64>>,
    pub main_pvims: Vec<Option<f64>>,
    pub tau_main: f64,
    pub tau_dir: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub variables: Vec<String>,
    pub weights: Vec<f64>,
    pub ranking: Vec<RankedVariable>,
    pub kings: Vec<KingDocument>,
    pub survived_trace: Vec<Vec<String>>,
    pub concatenated_paths: PathTable,
    pub typed_interactions: Vec<InteractionEntry>,
}

fn entries(records: &[PathRecord], names: &[String]) -> Vec<PathEntry> {
    records
        .iter()
        .map(|r| PathEntry {
            vars: r.vars.iter().map(|&v| names[v].clone()).collect(),
            count: r.reproduction_count,
            pvim_sum: r.pvim_sum,
            avg_pvim: r.avg_pvim(),
        })
        .collect()
}

fn table(depths: impl Iterator<Item = usize>, list: impl Fn(usize, Metric) -> Vec<PathEntry>) -> PathTable {
    depths
        .map(|d| {
            let by_metric = Metric::ALL.iter().map(|&m| (m.as_str().to_string(), list(d, m))).collect();
            (d.to_string(), by_metric)
        })
        .collect()
}

impl ReportDocument {
    pub fn from_report(report: &IkfReport, names: &[String]) -> Self {
        let name = |v: usize| names[v].clone();
        let names_of = |vs: &[usize]| vs.iter().map(|&v| name(v)).collect::<Vec<_>>();
        let depths: Vec<usize> = {
            let mut d: Vec<usize> = report.paths.iter().map(|c| c.depth).collect();
            d.dedup();
            d
        };
        let kings = report
            .kings
            .iter()
            .zip(&report.orders)
            .map(|(k, o)| KingDocument {
                king: name(k.king),
                weights: k.weights.clone(),
                candidate_pool: names_of(&k.candidate_pool),
                pvim_profile: k.profile.mean.clone(),
                pvim_profile_sum: k.profile.sum.clone(),
                orders: o.orders.clone(),
                order_tau: o.tau,
                shortlists: table(k.shortlists.iter().map(|s| s.depth), |d, m| entries(k.shortlist(d, m), names)),
            })
            .collect();
        ReportDocument {
            variables: names.to_vec(),
            weights: report.weights.clone(),
            ranking: report
                .ranking
                .iter()
                .map(|&v| RankedVariable {
                    variable: name(v),
                    weight: report.weights[v],
                })
                .collect(),
            kings,
            survived_trace: report.survived_trace.iter().map(|s| names_of(s)).collect(),
            concatenated_paths: table(depths.into_iter(), |d, m| entries(report.concatenated(d, m), names)),
            typed_interactions: report
                .typed_interactions
                .iter()
                .map(|t| InteractionEntry {
                    vars: names_of(&t.vars),
                    order: t.order,
                    kind: t.kind,
                    dominant: names_of(&t.dominant),
                    low_confidence: t.low_confidence,
                    direction_pvims: t.direction_pvims.clone(),
                    main_pvims: t.main_pvims.clone(),
                    tau_main: t.tau_main,
                    tau_dir: t.tau_dir,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| IkfError::io(path, e))?;
        Self::from_json(&text)
    }

    /// `(file name, contents)` for every CSV table.
    pub fn render_csvs(&self) -> Result<Vec<(String, Vec<u8>)>> {
        let mut out = vec![
            ("ranking.csv".to_string(), self.ranking_csv()?),
            ("king_pvims.csv".to_string(), self.profile_csv(false)?),
            ("king_pvims_sum.csv".to_string(), self.profile_csv(true)?),
            ("interactions.csv".to_string(), self.interactions_csv()?),
        ];
        for (d, by_metric) in &self.concatenated_paths {
            for (m, list) in by_metric {
                out.push((format!("paths_d{d}_by_{m}.csv"), paths_csv(list, d.parse().unwrap_or(0))?));
            }
        }
        Ok(out)
    }

    /// Writes `report.json` and every CSV into `dir`; returns the paths written.
    pub fn write_all(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| IkfError::io(dir, e))?;
        let json = dir.join("report.json");
        write_atomic(&json, self.to_json()?.as_bytes())?;
        let mut written = vec![json];
        written.extend(self.write_csvs(dir)?);
        Ok(written)
    }

    pub fn write_csvs(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| IkfError::io(dir, e))?;
        let mut written = Vec::new();
        for (name, bytes) in self.render_csvs()? {
            let path = dir.join(name);
            write_atomic(&path, &bytes)?;
            written.push(path);
        }
        Ok(written)
    }

    fn ranking_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv_writer();
        record(&mut w, ["rank", "variable", "weight"])?;
        for (i, r) in self.ranking.iter().enumerate() {
            record(&mut w, [(i + 1).to_string(), r.variable.clone(), r.weight.to_string()])?;
        }
        finish(w)
    }

    fn profile_csv(&self, sums: bool) -> Result<Vec<u8>> {
        let depth = self.kings.iter().map(|k| k.pvim_profile.len()).max().unwrap_or(0);
        let mut w = csv_writer();
        let mut header = vec!["king".to_string()];
        header.extend((1..=depth).map(|d| format!("d{d}")));
        header.push("orders".into());
        record(&mut w, header)?;
        for k in &self.kings {
            let values = if sums { &k.pvim_profile_sum } else { &k.pvim_profile };
            let mut row = vec![k.king.clone()];
            row.extend(values.iter().map(f64::to_string));
            row.push(k.orders.iter().map(usize::to_string).collect::<Vec<_>>().join(" "));
            record(&mut w, row)?;
        }
        finish(w)
    }

    /// One row per recovered ordering of each typed interaction.
    fn interactions_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv_writer();
        record(
            &mut w,
            ["kind", "interaction", "dominant", "low_confidence", "path", "repetitions", "avg_pvim"],
        )?;
        for t in &self.typed_interactions {
            let mut set = t.vars.clone();
            set.sort();
            let mut rows: BTreeMap<Vec<String>, &PathEntry> = BTreeMap::new();
            if let Some(by_metric) = self.concatenated_paths.get(&t.order.to_string()) {
                for e in by_metric.values().flatten() {
                    let mut s = e.vars.clone();
                    s.sort();
                    if s == set {
                        rows.entry(e.vars.clone()).or_insert(e);
                    }
                }
            }
            for (vars, e) in rows {
                record(
                    &mut w,
                    [
                        t.kind.as_str().to_string(),
                        t.vars.join(" "),
                        t.dominant.join(" "),
                        t.low_confidence.to_string(),
                        vars.join(" "),
                        e.count.to_string(),
                        e.avg_pvim.to_string(),
                    ],
                )?;
            }
        }
        finish(w)
    }
}

fn paths_csv(list: &[PathEntry], depth: usize) -> Result<Vec<u8>> {
    let mut w = csv_writer();
    let mut header = vec!["king".to_string(), "rank".to_string()];
    header.extend((1..=depth).map(|d| format!("depth{d}")));
    header.extend(["count", "pvim_sum", "avg_pvim"].map(String::from));
    record(&mut w, header)?;
    let mut rank = 0;
    let mut king: Option<&str> = None;
    for e in list {
        if king != Some(e.vars[0].as_str()) {
            king = Some(&e.vars[0]);
            rank = 0;
        }
        rank += 1;
        let mut row = vec![e.vars[0].clone(), rank.to_string()];
        row.extend(e.vars.iter().cloned());
        row.extend([e.count.to_string(), e.pvim_sum.to_string(), e.avg_pvim.to_string()]);
        record(&mut w, row)?;
    }
    finish(w)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn record<I, T>(w: &mut csv::Writer<Vec<u8>>, fields: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    w.write_record(fields).map_err(|e| IkfError::Csv {
        path: PathBuf::new(),
        message: e.to_string(),
    })
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| IkfError::Csv {
        path: PathBuf::new(),
        message: e.to_string(),
    })
}
