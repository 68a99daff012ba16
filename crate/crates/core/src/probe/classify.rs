use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{column_stats, fold_indices, kfold_split, standardize, MetricFolds, ProbeKind, ProbeResult, ProbeSpec};
use crate::error::{Error, Result};
use crate::eval::classification_scores;
use crate::numkit::{glorot_uniform, Adam, Matrix, Tape};

const LOGREG_EPOCHS: usize = 500;
const LOGREG_LR: f64 = 0.01;
const LINEAR_L2: f64 = 1e-4;
const MLP_HIDDEN: usize = 100;
const MLP_EPOCHS: usize = 200;
const MLP_LR: f64 = 0.001;
const MLP_BATCH: usize = 200;
const MLP_L2: f64 = 1e-4;

/// Stratified k-fold classification with LG-R, SVM-L or MLP, reporting
/// macro- and micro-F1 per test fold.
pub fn classification_probe(z: ArrayView2<f64>, classes: &[usize], spec: &ProbeSpec) -> Result<ProbeResult> {
    if spec.kind == ProbeKind::LinearRegression {
        return Err(Error::InvalidArgument("LN-R is not a classification probe".into()));
    }
    let n = z.nrows();
    if classes.len() != n {
        return Err(Error::Shape(format!("{} class labels for {n} rows", classes.len())));
    }
    let n_classes = classes.iter().max().map_or(0, |m| m + 1);
    let mut present = vec![false; n_classes];
    classes.iter().for_each(|&c| present[c] = true);
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::InvalidArgument("classification probe needs at least two classes".into()));
    }
    let folds = kfold_split(n, spec.folds, Some(classes), spec.seed)?;
    let (mut macro_f1, mut micro_f1) = (Vec::new(), Vec::new());
    for f in 0..spec.folds {
        let (train, test) = fold_indices(&folds, f);
        let (mu, sd) = column_stats(z, &train);
        let xtr = standardize(z, &train, &mu, &sd);
        let xte = standardize(z, &test, &mu, &sd);
        let ytr: Vec<usize> = train.iter().map(|&i| classes[i]).collect();
        let yte: Vec<usize> = test.iter().map(|&i| classes[i]).collect();
        let mut seen = vec![false; n_classes];
        ytr.iter().for_each(|&c| seen[c] = true);
        if seen.iter().zip(&present).any(|(s, p)| *p && !*s) {
            log::warn!("fold {f}: a class is missing from the training split");
        }
        let fold_seed = spec.seed ^ ((f as u64 + 1) << 32);
        let scores = match spec.kind {
            ProbeKind::LogisticRegression => fit_logreg(&xtr, &ytr, n_classes)?.dot_bias(&xte),
            ProbeKind::LinearSvm => fit_svm(&xtr, &ytr, n_classes)?.dot_bias(&xte),
            ProbeKind::Mlp => fit_mlp(&xtr, &ytr, n_classes, fold_seed)?.predict(&xte)?,
            ProbeKind::LinearRegression => unreachable!(),
        };
        let pred = argmax_rows(&scores);
        let s = classification_scores(&yte, &pred)?;
        macro_f1.push(s.macro_f1);
        micro_f1.push(s.micro_f1);
    }
    Ok(ProbeResult {
        kind: spec.kind,
        metrics: vec![
            MetricFolds { name: "macro_f1".into(), folds: macro_f1 },
            MetricFolds { name: "micro_f1".into(), folds: micro_f1 },
        ],
    })
}

fn argmax_rows(s: &Array2<f64>) -> Vec<usize> {
    s.rows()
        .into_iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |a, (i, &v)| if v > a.1 { (i, v) } else { a })
                .0
        })
        .collect()
}

struct Linear {
    w: Matrix,
    b: Matrix,
}

impl Linear {
    fn dot_bias(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }
}

/// Multinomial logistic regression by full-batch Adam from zero weights.
fn fit_logreg(x: &Array2<f64>, y: &[usize], c: usize) -> Result<Linear> {
    let labels = Arc::new(y.to_vec());
    let mut params = vec![Matrix::zeros((x.ncols(), c)), Matrix::zeros((1, c))];
    let mut adam = Adam::new(LOGREG_LR);
    for _ in 0..LOGREG_EPOCHS {
        let mut t = Tape::new();
        let xv = t.constant(x.clone());
        let w = t.param(params[0].clone());
        let b = t.param(params[1].clone());
        let xw = t.matmul(xv, w)?;
        let logits = t.add_row(xw, b)?;
        let ce = t.softmax_cross_entropy(logits, labels.clone())?;
        let reg = t.sum_squares(w)?;
        let reg = t.scale(reg, 0.5 * LINEAR_L2)?;
        let loss = t.add(ce, reg)?;
        let mut g = t.backward(loss)?;
        let grads = [g.take(w), g.take(b)];
        let mut refs: Vec<&mut Matrix> = params.iter_mut().collect();
        adam.step(&mut refs, &grads)?;
    }
    let b = params.pop().unwrap();
    let w = params.pop().unwrap();
    Ok(Linear { w, b })
}

/// One-vs-rest linear SVM: mean hinge loss plus `λ/2‖W‖²`, minimized by
/// Adam on the subgradient.
fn fit_svm(x: &Array2<f64>, y: &[usize], c: usize) -> Result<Linear> {
    let n = x.nrows() as f64;
    let signs = Array2::from_shape_fn((x.nrows(), c), |(i, k)| if y[i] == k { 1.0 } else { -1.0 });
    let mut params = vec![Matrix::zeros((x.ncols(), c)), Matrix::zeros((1, c))];
    let mut adam = Adam::new(LOGREG_LR);
    for _ in 0..LOGREG_EPOCHS {
        let scores = x.dot(&params[0]) + &params[1];
        let mut active = signs.clone();
        ndarray::Zip::from(&mut active)
            .and(&scores)
            .for_each(|a, &s| if *a * s >= 1.0 { *a = 0.0 });
        let gw = x.t().dot(&active) * (-1.0 / n) + &params[0] * LINEAR_L2;
        let gb = active.sum_axis(Axis(0)).insert_axis(Axis(0)) * (-1.0 / n);
        let mut refs: Vec<&mut Matrix> = params.iter_mut().collect();
        adam.step(&mut refs, &[gw, gb])?;
    }
    let b = params.pop().unwrap();
    let w = params.pop().unwrap();
    Ok(Linear { w, b })
}

struct Mlp {
    params: Vec<Matrix>,
}

impl Mlp {
    fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let mut h = x.clone();
        for layer in 0..3 {
            h = h.dot(&self.params[2 * layer]) + &self.params[2 * layer + 1];
            if layer < 2 {
                h.mapv_inplace(|v| v.max(0.0));
            }
        }
        Ok(h)
    }
}

/// Two ReLU hidden layers, minibatch Adam, fixed epoch count.
fn fit_mlp(x: &Array2<f64>, y: &[usize], c: usize, seed: u64) -> Result<Mlp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let widths = [x.ncols(), MLP_HIDDEN, MLP_HIDDEN, c];
    let mut params = Vec::new();
    for w in widths.windows(2) {
        params.push(glorot_uniform(w[0], w[1], &mut rng));
        params.push(Matrix::zeros((1, w[1])));
    }
    let mut adam = Adam::new(MLP_LR);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let batch = MLP_BATCH.min(x.nrows());
    for _ in 0..MLP_EPOCHS {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let xb = x.select(Axis(0), chunk);
            let yb = Arc::new(chunk.iter().map(|&i| y[i]).collect::<Vec<_>>());
            let mut t = Tape::new();
            let vars: Vec<_> = params.iter().map(|p| t.param(p.clone())).collect();
            let mut h = t.constant(xb);
            for layer in 0..3 {
                let z = t.matmul(h, vars[2 * layer])?;
                h = t.add_row(z, vars[2 * layer + 1])?;
                if layer < 2 {
                    h = t.relu(h)?;
                }
            }
            let mut loss = t.softmax_cross_entropy(h, yb)?;
            for layer in 0..3 {
                let sq = t.sum_squares(vars[2 * layer])?;
                let sq = t.scale(sq, 0.5 * MLP_L2 / chunk.len() as f64)?;
                loss = t.add(loss, sq)?;
            }
            let mut g = t.backward(loss)?;
            let grads: Vec<Matrix> = vars.iter().map(|&v| g.take(v)).collect();
            let mut refs: Vec<&mut Matrix> = params.iter_mut().collect();
            adam.step(&mut refs, &grads)?;
        }
    }
    Ok(Mlp { params })
}
