use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinStrategy {
    #[default]
    Quantile,
    EqualWidth,
}

/// Histogram-bins `values` into topological classes `0..n_bins`.
///
/// Quantile: a value's class is `⌊n_bins · #{x < value} / n⌋`, so ties
/// always share a class and the mapping is monotone. Equal-width splits
/// `[min, max]` into `n_bins` intervals. A constant vector maps to class 0.
pub fn bin_feature(values: &[f64], n_bins: usize, strategy: BinStrategy) -> Result<Vec<usize>> {
    if n_bins < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 bins, got {n_bins}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("cannot bin non-finite values".into()));
    }
    let n = values.len();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if n == 0 || lo == hi {
        warn!("binning a constant feature: every node falls into class 0");
        return Ok(vec![0; n]);
    }
    Ok(match strategy {
        BinStrategy::Quantile => {
            let mut sorted = values.to_vec();
            sorted.sort_by(f64::total_cmp);
            values
                .iter()
                .map(|v| {
                    let below = sorted.partition_point(|x| x < v);
                    ((n_bins * below) / n).min(n_bins - 1)
                })
                .collect()
        }
        BinStrategy::EqualWidth => values
            .iter()
            .map(|v| (((v - lo) / (hi - lo) * n_bins as f64) as usize).min(n_bins - 1))
            .collect(),
    })
}
