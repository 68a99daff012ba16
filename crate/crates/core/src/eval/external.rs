use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix as PfMatrix;
use serde::{Deserialize, Serialize};

use super::check_lengths;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExternalMetrics {
    pub nmi: f64,
    pub ari: f64,
    pub acc: f64,
}

fn contingency(a: &[usize], b: &[usize]) -> (Vec<Vec<u64>>, Vec<u64>, Vec<u64>) {
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let rows = table.iter().map(|r| r.iter().sum()).collect();
    let cols = (0..kb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    (table, rows, cols)
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information over the arithmetic mean of the two entropies. Two
/// single-cluster partitions score 1.
pub fn normalized_mutual_info(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let n = pred.len() as f64;
    let (table, rows, cols) = contingency(pred, truth);
    let (hu, hv) = (entropy(&rows, n), entropy(&cols, n));
    if hu == 0.0 && hv == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    let denom = 0.5 * (hu + hv);
    Ok((mi / denom).clamp(0.0, 1.0))
}

fn comb2(x: u64) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Adjusted Rand index under the permutation model.
pub fn adjusted_rand_index(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let n = pred.len() as u64;
    let (table, rows, cols) = contingency(pred, truth);
    let index: f64 = table.iter().flatten().map(|&c| comb2(c)).sum();
    let a: f64 = rows.iter().map(|&c| comb2(c)).sum();
    let b: f64 = cols.iter().map(|&c| comb2(c)).sum();
    let total = comb2(n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = a * b / total;
    let max = 0.5 * (a + b);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Fraction of points matched under the best one-to-one cluster→class map.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    if pred.is_empty() {
        return Ok(1.0);
    }
    let (table, _, _) = contingency(pred, truth);
    let size = table.len().max(table[0].len());
    let weights = PfMatrix::from_fn(size, size, |(i, j)| {
        table.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0) as i64
    });
    let (matched, _) = kuhn_munkres(&weights);
    Ok(matched as f64 / pred.len() as f64)
}

pub fn external_metrics(pred: &[usize], truth: &[usize]) -> Result<ExternalMetrics> {
    Ok(ExternalMetrics {
        nmi: normalized_mutual_info(pred, truth)?,
        ari: adjusted_rand_index(pred, truth)?,
        acc: clustering_accuracy(pred, truth)?,
    })
}
