//! Datasets, CSV ingestion and seeded random streams.

mod csv_io;
mod seed;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IkfError, Result};

pub use csv_io::{load_csv, save_csv, ColumnRef};
pub use seed::{SeedContext, Stage, PVIM_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    BinaryClassification,
}

impl FromStr for Task {
    type Err = IkfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "regression" | "reg" => Ok(Task::Regression),
            "classification" | "binary" | "binary_classification" => {
                Ok(Task::BinaryClassification)
            }
            other => Err(IkfError::InvalidParam(format!("unknown task `{other}`"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Regression => f.write_str("regression"),
            Task::BinaryClassification => f.write_str("classification"),
        }
    }
}

/// Predictor matrix plus response.
///
/// `x` is stored column-major so that split search over one variable reads a
/// contiguous slice. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    task: Task,
    names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from a column-major buffer of length `n * p`.
    pub fn from_column_major(
        n: usize,
        p: usize,
        x: Vec<f64>,
        y: Vec<f64>,
        task: Task,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(IkfError::InvalidData(format!("need n >= 2 samples, got {n}")));
        }
        if p < 1 {
            return Err(IkfError::InvalidData("need at least one predictor".into()));
        }
        if x.len() != n * p {
            return Err(IkfError::InvalidData(format!(
                "predictor buffer has {} values, expected {n} x {p}",
                x.len()
            )));
        }
        if y.len() != n {
            return Err(IkfError::InvalidData(format!(
                "response has {} values, expected {n}",
                y.len()
            )));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(IkfError::InvalidData(format!(
                "non-finite predictor at row {}, column {}",
                pos % n,
                pos / n
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(IkfError::InvalidData(format!("non-finite response at row {i}")));
        }
        if task == Task::BinaryClassification {
            if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
                return Err(IkfError::BadLabel {
                    location: format!("row {i}"),
                    value: y[i],
                });
            }
        }
        let names = match names {
            Some(names) => {
                if names.len() != p {
                    return Err(IkfError::InvalidData(format!(
                        "{} names given for {p} predictors",
                        names.len()
                    )));
                }
                names
            }
            None => default_names(p),
        };
        Ok(Dataset {
            n,
            p,
            x,
            y,
            task,
            names,
        })
    }

    /// Builds a dataset from one vector per predictor.
    pub fn from_columns(
        columns: Vec<Vec<f64>>,
        y: Vec<f64>,
        task: Task,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = y.len();
        let p = columns.len();
        if let Some(j) = columns.iter().position(|c| c.len() != n) {
            return Err(IkfError::InvalidData(format!(
                "column {j} has {} values, expected {n}",
                columns[j].len()
            )));
        }
        let x = columns.into_iter().flatten().collect();
        Self::from_column_major(n, p, x, y, task, names)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, var: usize) -> &str {
        &self.names[var]
    }

    #[inline]
    pub fn column(&self, var: usize) -> &[f64] {
        &self.x[var * self.n..(var + 1) * self.n]
    }

    #[inline]
    pub fn value(&self, row: usize, var: usize) -> f64 {
        self.x[var * self.n + row]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Population variance of the response.
    pub fn response_variance(&self) -> f64 {
        let mean = self.y.iter().sum::<f64>() / self.n as f64;
        self.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / self.n as f64
    }
}

pub fn default_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("x{j}")).collect()
}

/// Uniform random permutation of `values` (Fisher-Yates).
pub fn permute_column<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> Vec<f64> {
    let mut out = values.to_vec();
    out.shuffle(rng);
    out
}
