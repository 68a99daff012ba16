//! Graph autoencoders: two-layer message-passing encoders decoded by
//! `sigmoid(HHᵀ)` against the adjacency.

mod diagnostic;
mod model;

pub use diagnostic::{first_layer_norm_degree_spearman, sum_rule_diagnostic, SumRuleDiagnostic};
pub use model::{Forward, GaeModel, TrainReport};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    L1Sum,
    L2Sum,
    Concat,
    First,
    Mean,
    Mixed,
    Spectral,
}

/// Which propagation operator a variant uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    Sum,
    Mean,
    Spectral,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::L1Sum,
        Variant::L2Sum,
        Variant::Concat,
        Variant::First,
        Variant::Mean,
        Variant::Mixed,
        Variant::Spectral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::L1Sum => "L1_SUM",
            Variant::L2Sum => "L2_SUM",
            Variant::Concat => "CONCAT",
            Variant::First => "FIRST",
            Variant::Mean => "MEAN",
            Variant::Mixed => "MIXED",
            Variant::Spectral => "SPECTRAL",
        }
    }

    /// Model name used in reports, e.g. `GAE_FIRST`.
    pub fn model_name(self) -> String {
        format!("GAE_{}", self.name())
    }

    pub fn aggregation(self) -> Aggregation {
        match self {
            Variant::Mean | Variant::Mixed => Aggregation::Mean,
            Variant::Spectral => Aggregation::Spectral,
            _ => Aggregation::Sum,
        }
    }

    pub fn layers(self) -> usize {
        if self == Variant::L1Sum {
            1
        } else {
            2
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase();
        let key = key.strip_prefix("GAE_").unwrap_or(&key);
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == key)
            .ok_or_else(|| Error::Unsupported(format!("unknown GAE variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaeConfig {
    pub variant: Variant,
    pub hidden_dim: usize,
    pub out_dim: usize,
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub alpha: f64,
    pub proximity_k: usize,
    pub batch_norm: bool,
    pub seed: u64,
}

impl GaeConfig {
    /// Defaults for `variant`: 64-wide layers (32 + 32 for CONCAT), Adam at
    /// 0.01, 250 epochs with patience 10.
    pub fn new(variant: Variant, seed: u64) -> Self {
        let width = if variant == Variant::Concat { 32 } else { 64 };
        Self {
            variant,
            hidden_dim: width,
            out_dim: width,
            lr: 0.01,
            max_epochs: 250,
            patience: 10,
            min_delta: 1e-6,
            alpha: 0.5,
            proximity_k: 3,
            batch_norm: true,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("{} config: {m}", self.variant.model_name())));
        if self.hidden_dim == 0 || self.out_dim == 0 {
            return bad("layer widths must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if self.patience >= self.max_epochs {
            return bad("patience must be smaller than max_epochs");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.variant == Variant::Mixed && self.proximity_k == 0 {
            return bad("proximity_k must be >= 1");
        }
        Ok(())
    }

    /// Width of the extracted embedding.
    pub fn embedding_dim(&self) -> usize {
        match self.variant {
            Variant::L1Sum | Variant::First => self.hidden_dim,
            Variant::Concat => self.hidden_dim + self.out_dim,
            _ => self.out_dim,
        }
    }
}
