use serde::{Deserialize, Serialize};

use super::check_lengths;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub macro_f1: f64,
    pub micro_f1: f64,
}

/// Macro-F1 averages over every class present in either vector, so a class
/// that is never predicted contributes 0. Micro-F1 pools all decisions and
/// equals accuracy for single-label data.
pub fn classification_scores(y_true: &[usize], y_pred: &[usize]) -> Result<ClassificationScores> {
    check_lengths(y_true.len(), y_pred.len())?;
    let k = y_true.iter().chain(y_pred).max().map_or(0, |m| m + 1);
    let (mut tp, mut fp, mut fne) = (vec![0usize; k], vec![0usize; k], vec![0usize; k]);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t == p {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fne[t] += 1;
        }
    }
    let mut f1_sum = 0.0;
    let mut present = 0;
    for c in 0..k {
        let denom = 2 * tp[c] + fp[c] + fne[c];
        if denom == 0 {
            continue;
        }
        present += 1;
        f1_sum += 2.0 * tp[c] as f64 / denom as f64;
    }
    let total_tp: usize = tp.iter().sum();
    let micro = if y_true.is_empty() {
        0.0
    } else {
        let (sfp, sfn): (usize, usize) = (fp.iter().sum(), fne.iter().sum());
        2.0 * total_tp as f64 / (2 * total_tp + sfp + sfn) as f64
    };
    Ok(ClassificationScores {
        macro_f1: if present == 0 { 0.0 } else { f1_sum / present as f64 },
        micro_f1: micro,
    })
}
