use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, ArrayView2};

use super::{column_stats, fold_indices, kfold_split, standardize, MetricFolds, ProbeKind, ProbeResult, ProbeSpec};
use crate::error::{Error, Result};

/// Ridge penalty; only there to keep the normal equations well conditioned.
pub const RIDGE_LAMBDA: f64 = 1e-6;

/// Ridge regression with train-fold standardization of features and target.
/// Test MSE/MAE are in units of the train-fold target standard deviation.
pub fn regression_probe(z: ArrayView2<f64>, target: &[f64], spec: &ProbeSpec) -> Result<ProbeResult> {
    if spec.kind != ProbeKind::LinearRegression {
        return Err(Error::InvalidArgument(format!("{} is not a regression probe", spec.kind)));
    }
    let n = z.nrows();
    if target.len() != n {
        return Err(Error::Shape(format!("{} targets for {n} rows", target.len())));
    }
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("regression target has non-finite values".into()));
    }
    let first = target.first().copied().unwrap_or(0.0);
    if target.iter().all(|&t| t == first) {
        return Err(Error::InvalidArgument("constant regression target cannot be standardized".into()));
    }
    let folds = kfold_split(n, spec.folds, None, spec.seed)?;
    let y = Array1::from(target.to_vec());
    let (mut mse, mut mae) = (Vec::new(), Vec::new());
    for f in 0..spec.folds {
        let (train, test) = fold_indices(&folds, f);
        let (mu, sd) = column_stats(z, &train);
        let xtr = standardize(z, &train, &mu, &sd);
        let xte = standardize(z, &test, &mu, &sd);
        let ytr = y.select(ndarray::Axis(0), &train);
        let (ym, ysd) = (ytr.mean().unwrap(), ytr.std(0.0));
        if ysd == 0.0 {
            return Err(Error::InvalidArgument(format!("target is constant on training fold {f}")));
        }
        let ytr = (ytr - ym) / ysd;
        let beta = ridge(&xtr, &ytr)?;
        let pred = xte.dot(&beta);
        let yte = (y.select(ndarray::Axis(0), &test) - ym) / ysd;
        let resid = pred - yte;
        mse.push(resid.mapv(|r| r * r).mean().unwrap());
        mae.push(resid.mapv(f64::abs).mean().unwrap());
    }
    Ok(ProbeResult {
        kind: spec.kind,
        metrics: vec![
            MetricFolds { name: "mse".into(), folds: mse },
            MetricFolds { name: "mae".into(), folds: mae },
        ],
    })
}

/// Solves `(XᵀX + λI)β = Xᵀy`; the columns are centered so no intercept.
fn ridge(x: &ndarray::Array2<f64>, y: &Array1<f64>) -> Result<Array1<f64>> {
    let d = x.ncols();
    let xtx = x.t().dot(x);
    let xty = x.t().dot(y);
    let mut a = DMatrix::from_fn(d, d, |i, j| xtx[[i, j]]);
    for i in 0..d {
        a[(i, i)] += RIDGE_LAMBDA;
    }
    let b = DVector::from_iterator(d, xty.iter().copied());
    let sol = match a.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::InvalidArgument("singular ridge system".into()))?,
    };
    Ok(Array1::from_iter(sol.iter().copied()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn spec(seed: u64) -> ProbeSpec {
        ProbeSpec::new(ProbeKind::LinearRegression, seed)
    }

    #[test]
    fn one_hot_of_classes_explains_class_index() {
        let classes: Vec<usize> = (0..200).map(|i| i % 5).collect();
        let z = Array2::from_shape_fn((200, 5), |(i, j)| f64::from(u8::from(classes[i] == j)));
        let t: Vec<f64> = classes.iter().map(|&c| c as f64).collect();
        let r = regression_probe(z.view(), &t, &spec(1)).unwrap();
        assert!(r.mean("mse").unwrap() < 0.05);
    }

    #[test]
    fn noise_gives_unit_mse() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut total = 0.0;
        for draw in 0..50 {
            let z = Array2::from_shape_simple_fn((500, 8), || rng.sample::<f64, _>(StandardNormal));
            let t: Vec<f64> = (0..500).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            total += regression_probe(z.view(), &t, &spec(draw)).unwrap().mean("mse").unwrap();
        }
        let avg = total / 50.0;
        assert!((avg - 1.0).abs() < 0.15, "{avg}");
    }

    #[test]
    fn target_as_column_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut z = Array2::from_shape_simple_fn((100, 6), || rng.random::<f64>());
        let t: Vec<f64> = (0..100).map(|i| (i as f64).sqrt()).collect();
        for i in 0..100 {
            z[[i, 2]] = t[i];
        }
        assert!(regression_probe(z.view(), &t, &spec(0)).unwrap().mean("mse").unwrap() < 1e-4);
    }

    #[test]
    fn invariant_to_permutation_and_rescaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = Array2::from_shape_simple_fn((120, 5), || rng.random::<f64>());
        let t: Vec<f64> = (0..120).map(|i| z[[i, 0]] * 2.0 - z[[i, 3]] + rng.random::<f64>() * 0.3).collect();
        let base = regression_probe(z.view(), &t, &spec(9)).unwrap();
        let perm = [3, 0, 4, 2, 1];
        let scale = [2.0, -0.5, 10.0, 3.0, 0.1];
        let shifted = Array2::from_shape_fn((120, 5), |(i, j)| z[[i, perm[j]]] * scale[j] + j as f64);
        let other = regression_probe(shifted.view(), &t, &spec(9)).unwrap();
        for (a, b) in base.metrics.iter().zip(&other.metrics) {
            for (x, y) in a.folds.iter().zip(&b.folds) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn constant_target_rejected() {
        let z = Array2::<f64>::zeros((10, 2));
        assert!(regression_probe(z.view(), &[1.0; 10], &spec(0)).is_err());
    }
}
