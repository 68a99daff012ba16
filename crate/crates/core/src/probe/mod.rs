//! Cross-validated probes: does a frozen embedding linearly (or shallowly)
//! encode a target?

mod classify;
mod folds;
mod regression;

pub use classify::classification_probe;
pub use folds::kfold_split;
pub use regression::{regression_probe, RIDGE_LAMBDA};

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{mean, sample_std};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProbeKind {
    #[serde(rename = "LN-R")]
    LinearRegression,
    #[serde(rename = "LG-R")]
    LogisticRegression,
    #[serde(rename = "SVM-L")]
    LinearSvm,
    #[serde(rename = "MLP")]
    Mlp,
}

impl ProbeKind {
    pub const CLASSIFIERS: [ProbeKind; 3] = [ProbeKind::LogisticRegression, ProbeKind::LinearSvm, ProbeKind::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::LinearRegression => "LN-R",
            ProbeKind::LogisticRegression => "LG-R",
            ProbeKind::LinearSvm => "SVM-L",
            ProbeKind::Mlp => "MLP",
        }
    }
}

impl fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProbeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [ProbeKind::LinearRegression, ProbeKind::LogisticRegression, ProbeKind::LinearSvm, ProbeKind::Mlp]
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Unsupported(format!("unknown probe {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub kind: ProbeKind,
    pub folds: usize,
    pub seed: u64,
}

impl ProbeSpec {
    pub fn new(kind: ProbeKind, seed: u64) -> Self {
        Self { kind, folds: 5, seed }
    }
}

/// One metric's per-fold values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricFolds {
    pub name: String,
    pub folds: Vec<f64>,
}

impl MetricFolds {
    pub fn mean(&self) -> f64 {
        mean(&self.folds)
    }

    pub fn std(&self) -> f64 {
        sample_std(&self.folds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub kind: ProbeKind,
    pub metrics: Vec<MetricFolds>,
}

impl ProbeResult {
    pub fn metric(&self, name: &str) -> Option<&MetricFolds> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn mean(&self, name: &str) -> Option<f64> {
        self.metric(name).map(MetricFolds::mean)
    }
}

/// Column means and standard deviations of the rows in `idx`; zero-variance
/// columns get scale 1 so they standardize to 0.
pub(crate) fn column_stats(x: ArrayView2<f64>, idx: &[usize]) -> (Array1<f64>, Array1<f64>) {
    let sub = x.select(Axis(0), idx);
    let mu = sub.mean_axis(Axis(0)).expect("non-empty fold");
    let var = sub.var_axis(Axis(0), 0.0);
    let sd = var.mapv(|v| if v > 1e-24 { v.sqrt() } else { 1.0 });
    (mu, sd)
}

pub(crate) fn standardize(x: ArrayView2<f64>, idx: &[usize], mu: &Array1<f64>, sd: &Array1<f64>) -> Array2<f64> {
    (x.select(Axis(0), idx) - mu) / sd
}

pub(crate) fn fold_indices(folds: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, &g) in folds.iter().enumerate() {
        if g == f {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    (train, test)
}
