//! Synthetic regression scenarios with known active variables and
//! interactions.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SeedContext, Stage, Task};
use crate::error::{IkfError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    A1,
    A2,
    A3,
    A4,
    A5,
    B1,
    B2,
    B3,
    B4,
    B5,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 10] = [
        ScenarioId::A1,
        ScenarioId::A2,
        ScenarioId::A3,
        ScenarioId::A4,
        ScenarioId::A5,
        ScenarioId::B1,
        ScenarioId::B2,
        ScenarioId::B3,
        ScenarioId::B4,
        ScenarioId::B5,
    ];

    /// Two pairwise interactions (A) rather than one three-way one (B).
    pub fn is_pairwise(self) -> bool {
        matches!(self, ScenarioId::A1 | ScenarioId::A2 | ScenarioId::A3 | ScenarioId::A4 | ScenarioId::A5)
    }

    /// Maximum tree depth used for this family.
    pub fn default_max_depth(self) -> usize {
        if self.is_pairwise() {
            4
        } else {
            5
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = format!("{self:?}").to_lowercase();
        f.write_str(&s)
    }
}

impl FromStr for ScenarioId {
    type Err = IkfError;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| IkfError::InvalidParam(format!("unknown scenario `{s}` (expected a1..a5 or b1..b5)")))
    }
}

/// Active variables and true interactions, as 0-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truth {
    pub active: Vec<usize>,
    pub interactions: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: ScenarioId,
    pub n: usize,
    pub p: usize,
    /// Signal scale.
    pub scale: f64,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Scenario {
    pub fn new(id: ScenarioId, n: usize, p: usize) -> Self {
        Scenario { id, n, p, scale: 2.0 }
    }

    pub fn truth(&self) -> Truth {
        if self.id.is_pairwise() {
            Truth {
                active: vec![0, 2, 4, 6],
                interactions: vec![vec![0, 2], vec![4, 6]],
            }
        } else {
            Truth {
                active: vec![0, 2, 4],
                interactions: vec![vec![0, 2, 4]],
            }
        }
    }

    /// Noise-free response; `x(v)` returns variable `v` (0-based).
    pub fn signal(&self, x: impl Fn(usize) -> f64) -> f64 {
        let s = self.scale;
        let (x1, x3, x5) = (x(0), x(2), x(4));
        match self.id {
            ScenarioId::A1 => s * x1 * x3 - s * x5 * f64::from(x(6) < 0.2),
            ScenarioId::A2 => 2.0 * s * x1 * x3.sin() + 2.0 * s * x5 * (x(6) + FRAC_PI_2).cos(),
            ScenarioId::A3 => s * x1.exp() * x3 / 2.0 - s * (5.0 * x5.abs()).ln() * x(6),
            ScenarioId::A4 => s * x1 * x3 * x3 / 2.0 - s * sign(x5) * x(6) * x(6),
            ScenarioId::A5 => s * x1 * x3 + 1.5 * s * x5 * x(6).sin(),
            ScenarioId::B1 => s * x1 * (1.0 + x3).powi(2) * x5.sin(),
            ScenarioId::B2 => s * x1 * (5.0 * (1.0 + x3).abs()).ln() * x5.sin(),
            ScenarioId::B3 => s * x1 * sign(1.0 + x3) * x5.sin(),
            ScenarioId::B4 => s * x1 * x3 * x5.sin(),
            ScenarioId::B5 => s * x1 * x3 * x5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let needed = if self.id.is_pairwise() { 7 } else { 5 };
        if self.p < needed {
            return Err(IkfError::InvalidParam(format!("scenario {} needs p >= {needed}", self.id)));
        }
        if self.n < 2 {
            return Err(IkfError::InvalidParam("scenario needs n >= 2".into()));
        }
        if !self.scale.is_finite() {
            return Err(IkfError::InvalidParam("scale must be finite".into()));
        }
        Ok(())
    }
}

/// Draws `x` and the noise from independent streams of `seeds`, so two
/// scenarios with the same seed and shape share the same `x`.
pub fn generate(scenario: &Scenario, seeds: &SeedContext) -> Result<Dataset> {
    scenario.validate()?;
    let (n, p) = (scenario.n, scenario.p);
    let mut rng = seeds.with_stage(Stage::ScenarioPredictors).stream(0);
    let x: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut noise = seeds.with_stage(Stage::ScenarioNoise).stream(0);
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut noise);
            scenario.signal(|v| x[v * n + i]) + e
        })
        .collect();
    Dataset::from_column_major(n, p, x, y, Task::Regression, None)
}
