use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            exaggeration: 12.0,
            exaggeration_iters: 250,
        }
    }
}

fn squared_distances(x: ArrayView2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum())
                .collect()
        })
        .collect();
    Array2::from_shape_fn((n, n), |(i, j)| rows[i][j])
}

/// Conditional affinities of row `i` whose entropy matches `ln(perplexity)`.
fn calibrate_row(d: &[f64], i: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let (mut beta, mut lo, mut hi) = (1.0, f64::NEG_INFINITY, f64::INFINITY);
    let mut p = vec![0.0; d.len()];
    for _ in 0..200 {
        // shift by the nearest neighbour distance for numerical stability
        let dmin = d
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v)
            .fold(f64::INFINITY, f64::min);
        let mut sum = 0.0;
        for (j, (pj, &dj)) in p.iter_mut().zip(d).enumerate() {
            *pj = if j == i { 0.0 } else { (-(dj - dmin) * beta).exp() };
            sum += *pj;
        }
        let mut h = 0.0;
        for (j, pj) in p.iter_mut().enumerate() {
            *pj /= sum;
            if j != i && *pj > 0.0 {
                h += beta * (d[j] - dmin) * *pj;
            }
        }
        h += sum.ln();
        let diff = h - target;
        if diff.abs() < 1e-5 {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = if lo.is_finite() { (beta + lo) / 2.0 } else { beta / 2.0 };
        }
    }
    p
}

/// Exact t-SNE to two dimensions. Gradient descent with gains, momentum 0.5
/// during early exaggeration and 0.8 afterwards.
pub fn tsne_project(z: ArrayView2<f64>, config: &TsneConfig, seed: u64) -> Result<Array2<f64>> {
    let n = z.nrows();
    if n < 4 || config.perplexity <= 0.0 || config.perplexity >= (n as f64 - 1.0) / 3.0 {
        return Err(Error::InvalidArgument(format!(
            "perplexity {} must be in (0, (n-1)/3) for n={n}",
            config.perplexity
        )));
    }
    let d2 = squared_distances(z);
    let cond: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| calibrate_row(d2.row(i).as_slice().expect("row-major"), i, config.perplexity))
        .collect();
    let p = Array2::from_shape_fn((n, n), |(i, j)| {
        ((cond[i][j] + cond[j][i]) / (2.0 * n as f64)).max(1e-12)
    });
    drop(cond);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let mut y = Array2::from_shape_simple_fn((n, 2), || normal.sample(&mut rng));
    let mut update = Array2::<f64>::zeros((n, 2));
    let mut gains = Array2::<f64>::ones((n, 2));

    for it in 0..config.iterations {
        let early = it < config.exaggeration_iters;
        let ex = if early { config.exaggeration } else { 1.0 };
        let momentum = if early { 0.5 } else { 0.8 };

        // Student-t kernel rows and their sums, in fixed row order
        let kernel_rows: Vec<(Vec<f64>, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let row: Vec<f64> = (0..n)
                    .map(|j| {
                        if i == j {
                            0.0
                        } else {
                            let dx = y[[i, 0]] - y[[j, 0]];
                            let dy = y[[i, 1]] - y[[j, 1]];
                            1.0 / (1.0 + dx * dx + dy * dy)
                        }
                    })
                    .collect();
                let s = row.iter().sum();
                (row, s)
            })
            .collect();
        let total: f64 = kernel_rows.iter().map(|(_, s)| s).sum();

        let grad: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let row = &kernel_rows[i].0;
                let mut g = [0.0; 2];
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let w = (ex * p[[i, j]] - row[j] / total) * row[j];
                    g[0] += w * (y[[i, 0]] - y[[j, 0]]);
                    g[1] += w * (y[[i, 1]] - y[[j, 1]]);
                }
                [4.0 * g[0], 4.0 * g[1]]
            })
            .collect();

        for i in 0..n {
            for c in 0..2 {
                let gr = grad[i][c];
                let same_sign = (gr > 0.0) == (update[[i, c]] > 0.0);
                gains[[i, c]] = if same_sign {
                    (gains[[i, c]] * 0.8).max(0.01)
                } else {
                    gains[[i, c]] + 0.2
                };
                update[[i, c]] = momentum * update[[i, c]] - config.learning_rate * gains[[i, c]] * gr;
                y[[i, c]] += update[[i, c]];
            }
        }
        let mean = y.mean_axis(ndarray::Axis(0)).expect("non-empty");
        y -= &mean;
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteLoss { epoch: config.iterations });
    }
    Ok(y)
}
