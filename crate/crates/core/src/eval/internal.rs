use ndarray::{Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_lengths;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InternalMetrics {
    pub db: f64,
    pub ch: f64,
    pub sc: f64,
}

fn dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

struct Groups {
    k: usize,
    sizes: Vec<usize>,
    centroids: Array2<f64>,
}

fn groups(z: ArrayView2<f64>, labels: &[usize]) -> Result<Groups> {
    check_lengths(z.nrows(), labels.len())?;
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    let mut centroids = Array2::<f64>::zeros((k, z.ncols()));
    for (i, &l) in labels.iter().enumerate() {
        sizes[l] += 1;
        centroids.row_mut(l).scaled_add(1.0, &z.row(i));
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidArgument(format!("label {empty} has no members")));
    }
    if k < 2 {
        return Err(Error::InvalidArgument("internal metrics need at least two labels".into()));
    }
    for (mut row, &s) in centroids.axis_iter_mut(Axis(0)).zip(&sizes) {
        row /= s as f64;
    }
    Ok(Groups { k, sizes, centroids })
}

/// Mean over groups of the worst `(sᵢ + sⱼ) / ‖cᵢ − cⱼ‖`, with `s` the mean
/// distance to the centroid. Coincident centroids contribute 0.
pub fn davies_bouldin(z: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    let g = groups(z, labels)?;
    let mut scatter = vec![0.0; g.k];
    for (i, &l) in labels.iter().enumerate() {
        scatter[l] += dist(z.row(i), g.centroids.row(l));
    }
    for (s, &n) in scatter.iter_mut().zip(&g.sizes) {
        *s /= n as f64;
    }
    let mut total = 0.0;
    for i in 0..g.k {
        let mut worst: f64 = 0.0;
        for j in 0..g.k {
            if i == j {
                continue;
            }
            let m = dist(g.centroids.row(i), g.centroids.row(j));
            if m > 0.0 {
                worst = worst.max((scatter[i] + scatter[j]) / m);
            }
        }
        total += worst;
    }
    Ok(total / g.k as f64)
}

/// Between- over within-group dispersion, scaled by `(n − k)/(k − 1)`.
/// Both dispersions zero gives 0; zero within-group dispersion alone gives +∞.
pub fn calinski_harabasz(z: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    let g = groups(z, labels)?;
    let n = z.nrows();
    let mean: Array1<f64> = z.mean_axis(Axis(0)).expect("non-empty");
    let extra: f64 = (0..g.k)
        .map(|c| g.sizes[c] as f64 * dist(g.centroids.row(c), mean.view()).powi(2))
        .sum();
    let intra: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| dist(z.row(i), g.centroids.row(l)).powi(2))
        .sum();
    if intra == 0.0 {
        if extra == 0.0 {
            log::warn!("Calinski-Harabasz on fully degenerate data; reporting 0");
            return Ok(0.0);
        }
        log::warn!("Calinski-Harabasz with zero within-group dispersion; reporting +inf");
        return Ok(f64::INFINITY);
    }
    Ok(extra * (n - g.k) as f64 / (intra * (g.k - 1) as f64))
}

/// Mean silhouette; singleton groups score 0, as do points whose `a` and
/// `b` are both 0.
pub fn silhouette(z: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
    let g = groups(z, labels)?;
    let n = z.nrows();
    if n <= g.k {
        return Err(Error::InvalidArgument("silhouette needs more points than labels".into()));
    }
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if g.sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; g.k];
            for j in 0..n {
                if j != i {
                    sums[labels[j]] += dist(z.row(i), z.row(j));
                }
            }
            let a = sums[own] / (g.sizes[own] - 1) as f64;
            let b = (0..g.k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / g.sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / n as f64)
}

pub fn internal_metrics(z: ArrayView2<f64>, labels: &[usize]) -> Result<InternalMetrics> {
    Ok(InternalMetrics {
        db: davies_bouldin(z, labels)?,
        ch: calinski_harabasz(z, labels)?,
        sc: silhouette(z, labels)?,
    })
}
