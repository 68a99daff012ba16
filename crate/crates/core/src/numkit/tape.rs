use std::sync::{Arc, OnceLock};

use ndarray::{concatenate, s, Array2, Axis, Zip};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::SparseMatrix;

pub type Matrix = Array2<f64>;

/// Variance floor for batch normalization.
pub const BN_EPS: f64 = 1e-5;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Op {
    Leaf,
    MatMul(Var, Var),
    SpMatMul(Arc<SparseMatrix>, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Relu(Var),
    Sigmoid(Var),
    ConcatCols(Var, Var),
    Gram(Var),
    Sum(Var),
    SumSquares(Var),
    MseConst(Var, Arc<Matrix>),
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Matrix,
        inv_std: Vec<f64>,
    },
    SigmoidGramMse {
        h: Var,
        // dL/dS for S = HHᵀ, kept from the forward pass
        score_grad: Matrix,
    },
    SoftmaxCrossEntropy {
        logits: Var,
        labels: Arc<Vec<usize>>,
        probs: Matrix,
    },
}

struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

fn check_finite_enabled() -> bool {
    static FLAG: OnceLock<bool> = OnceLock::new();
    *FLAG.get_or_init(|| {
        std::env::var("TOPOPROBE_CHECK_FINITE")
            .map(|v| v != "0" && !v.is_empty())
            .unwrap_or(false)
    })
}

/// Records a forward computation so [`Tape::backward`] can replay it in
/// reverse. Nodes are appended in evaluation order, which is already a
/// topological order.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by one backward pass, indexed by [`Var`].
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
    dims: Vec<(usize, usize)>,
}

impl Gradients {
    /// `∂loss/∂var`; zeros when `var` does not influence the loss.
    pub fn get(&self, var: Var) -> Matrix {
        match &self.grads[var.0] {
            Some(g) => g.clone(),
            None => Matrix::zeros(self.dims[var.0]),
        }
    }

    pub fn take(&mut self, var: Var) -> Matrix {
        self.grads[var.0]
            .take()
            .unwrap_or_else(|| Matrix::zeros(self.dims[var.0]))
    }
}

fn shape_err(op: &str, a: (usize, usize), b: (usize, usize)) -> Error {
    Error::Shape(format!("{op}: {}x{} vs {}x{}", a.0, a.1, b.0, b.1))
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op, requires_grad: bool) -> Result<Var> {
        if check_finite_enabled() && value.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value produced at tape node {}",
                self.nodes.len()
            )));
        }
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn dims(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.dim()
    }

    /// Trainable leaf.
    pub fn param(&mut self, value: Matrix) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that receives no gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (da, db) = (self.dims(a), self.dims(b));
        if da.1 != db.0 {
            return Err(shape_err("matmul", da, db));
        }
        let value = self.value(a).dot(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        self.push(value, Op::MatMul(a, b), rg)
    }

    /// Constant sparse left operand times a tape value.
    pub fn spmm(&mut self, sparse: Arc<SparseMatrix>, b: Var) -> Result<Var> {
        let value = sparse.matmul_dense(self.value(b).view())?;
        let rg = self.rg(b);
        self.push(value, Op::SpMatMul(sparse, b), rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (da, db) = (self.dims(a), self.dims(b));
        if da != db {
            return Err(shape_err("add", da, db));
        }
        let value = self.value(a) + self.value(b);
        let rg = self.rg(a) || self.rg(b);
        self.push(value, Op::Add(a, b), rg)
    }

    /// Broadcasts the `1 × c` row `b` over every row of `x`.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var> {
        let (dx, db) = (self.dims(x), self.dims(b));
        if db.0 != 1 || db.1 != dx.1 {
            return Err(shape_err("add_row", dx, db));
        }
        let value = self.value(x) + self.value(b);
        let rg = self.rg(x) || self.rg(b);
        self.push(value, Op::AddRow(x, b), rg)
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var> {
        let value = self.value(x) * c;
        let rg = self.rg(x);
        self.push(value, Op::Scale(x, c), rg)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        let value = self.value(x).mapv(f64::tanh);
        let rg = self.rg(x);
        self.push(value, Op::Tanh(x), rg)
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let value = self.value(x).mapv(|v| v.max(0.0));
        let rg = self.rg(x);
        self.push(value, Op::Relu(x), rg)
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        let value = self.value(x).mapv(sigmoid);
        let rg = self.rg(x);
        self.push(value, Op::Sigmoid(x), rg)
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (da, db) = (self.dims(a), self.dims(b));
        if da.0 != db.0 {
            return Err(shape_err("concat_cols", da, db));
        }
        let value = concatenate(Axis(1), &[self.value(a).view(), self.value(b).view()])
            .map_err(|e| Error::Shape(e.to_string()))?;
        let rg = self.rg(a) || self.rg(b);
        self.push(value, Op::ConcatCols(a, b), rg)
    }

    /// `H Hᵀ`.
    pub fn gram(&mut self, h: Var) -> Result<Var> {
        let hv = self.value(h);
        let value = hv.dot(&hv.t());
        let rg = self.rg(h);
        self.push(value, Op::Gram(h), rg)
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let value = Matrix::from_elem((1, 1), self.value(x).sum());
        let rg = self.rg(x);
        self.push(value, Op::Sum(x), rg)
    }

    pub fn sum_squares(&mut self, x: Var) -> Result<Var> {
        let value = Matrix::from_elem((1, 1), self.value(x).iter().map(|v| v * v).sum());
        let rg = self.rg(x);
        self.push(value, Op::SumSquares(x), rg)
    }

    /// Mean squared difference against a constant target.
    pub fn mse_const(&mut self, x: Var, target: Arc<Matrix>) -> Result<Var> {
        let dx = self.dims(x);
        if dx != target.dim() {
            return Err(shape_err("mse_const", dx, target.dim()));
        }
        let n = (dx.0 * dx.1) as f64;
        let sq: f64 = Zip::from(self.value(x))
            .and(&*target)
            .fold(0.0, |acc, &a, &t| acc + (a - t) * (a - t));
        let rg = self.rg(x);
        self.push(Matrix::from_elem((1, 1), sq / n), Op::MseConst(x, target), rg)
    }

    /// Per-column standardization over the full batch (biased variance,
    /// floor [`BN_EPS`]) followed by `γ ⊙ x̂ + β`; `γ`, `β` are `1 × c`.
    pub fn batch_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Result<Var> {
        let dx = self.dims(x);
        for p in [gamma, beta] {
            let dp = self.dims(p);
            if dp != (1, dx.1) {
                return Err(shape_err("batch_norm", dx, dp));
            }
        }
        let xv = self.value(x);
        let m = dx.0 as f64;
        let mean = xv.sum_axis(Axis(0)) / m;
        let centered = xv - &mean;
        let var = centered.mapv(|v| v * v).sum_axis(Axis(0)) / m;
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let mut xhat = centered;
        for (mut col, &s) in xhat.axis_iter_mut(Axis(1)).zip(&inv_std) {
            col *= s;
        }
        let value = &xhat * self.value(gamma) + self.value(beta);
        let rg = self.rg(x) || self.rg(gamma) || self.rg(beta);
        self.push(
            value,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            rg,
        )
    }

    /// `mean((sigmoid(H Hᵀ) − T)²)` over all `n²` entries, with `T` a sparse
    /// `n × n` target. The `n × n` score matrix is never kept on the tape;
    /// only its gradient is.
    pub fn sigmoid_gram_mse(&mut self, h: Var, target: &SparseMatrix) -> Result<Var> {
        let hv = self.value(h);
        let n = hv.nrows();
        if target.dims() != (n, n) {
            return Err(shape_err("sigmoid_gram_mse", (n, n), target.dims()));
        }
        let mut scores = hv.dot(&hv.t());
        if !scores.is_standard_layout() {
            scores = scores.as_standard_layout().into_owned();
        }
        let coeff = 2.0 / (n * n) as f64;
        let row_losses: Vec<f64> = scores
            .as_slice_mut()
            .expect("standard layout")
            .par_chunks_mut(n.max(1))
            .enumerate()
            .map(|(i, row)| {
                let (idx, vals) = target.row(i);
                let mut next = 0;
                let mut acc = 0.0;
                for (j, s) in row.iter_mut().enumerate() {
                    let t = if next < idx.len() && idx[next] == j {
                        next += 1;
                        vals[next - 1]
                    } else {
                        0.0
                    };
                    let p = sigmoid(*s);
                    let r = p - t;
                    acc += r * r;
                    *s = coeff * r * p * (1.0 - p);
                }
                acc
            })
            .collect();
        let loss = row_losses.iter().sum::<f64>() / (n * n) as f64;
        let rg = self.rg(h);
        self.push(
            Matrix::from_elem((1, 1), loss),
            Op::SigmoidGramMse {
                h,
                score_grad: scores,
            },
            rg,
        )
    }

    /// Mean negative log-likelihood of `labels` under `softmax(logits)`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: Arc<Vec<usize>>) -> Result<Var> {
        let lv = self.value(logits);
        let (n, c) = lv.dim();
        if labels.len() != n {
            return Err(shape_err("softmax_cross_entropy", (n, c), (labels.len(), 1)));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::InvalidArgument(format!("label {bad} outside {c} classes")));
        }
        let mut probs = lv.clone();
        let mut nll = 0.0;
        for (mut row, &y) in probs.outer_iter_mut().zip(labels.iter()) {
            let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            row.mapv_inplace(|v| (v - max).exp());
            let z = row.sum();
            row /= z;
            nll -= row[y].max(f64::MIN_POSITIVE).ln();
        }
        let rg = self.rg(logits);
        self.push(
            Matrix::from_elem((1, 1), nll / n as f64),
            Op::SoftmaxCrossEntropy {
                logits,
                labels,
                probs,
            },
            rg,
        )
    }

    /// Reverse pass from the scalar `loss`, consuming the tape.
    pub fn backward(self, loss: Var) -> Result<Gradients> {
        if self.dims(loss) != (1, 1) {
            let d = self.dims(loss);
            return Err(Error::Shape(format!("loss must be 1x1, got {}x{}", d.0, d.1)));
        }
        let dims: Vec<_> = self.nodes.iter().map(|n| n.value.dim()).collect();
        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Matrix::ones((1, 1)));
        let nodes = self.nodes;

        fn acc(grads: &mut [Option<Matrix>], v: Var, g: Matrix) {
            match &mut grads[v.0] {
                Some(existing) => *existing += &g,
                slot => *slot = Some(g),
            }
        }

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let val = |v: Var| &nodes[v.0].value;
            let needs = |v: Var| nodes[v.0].requires_grad;
            match &node.op {
                Op::Leaf => {
                    grads[idx] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    if needs(*a) {
                        acc(&mut grads, *a, g.dot(&val(*b).t()));
                    }
                    if needs(*b) {
                        acc(&mut grads, *b, val(*a).t().dot(&g));
                    }
                }
                Op::SpMatMul(sparse, b) => {
                    acc(&mut grads, *b, sparse.transpose_matmul_dense(g.view())?);
                }
                Op::Add(a, b) => {
                    if needs(*a) {
                        acc(&mut grads, *a, g.clone());
                    }
                    if needs(*b) {
                        acc(&mut grads, *b, g);
                    }
                }
                Op::AddRow(x, b) => {
                    if needs(*b) {
                        acc(&mut grads, *b, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    }
                    if needs(*x) {
                        acc(&mut grads, *x, g);
                    }
                }
                Op::Scale(x, c) => acc(&mut grads, *x, g * *c),
                Op::Tanh(x) => {
                    let mut gx = g;
                    Zip::from(&mut gx)
                        .and(&node.value)
                        .for_each(|gx, &y| *gx *= 1.0 - y * y);
                    acc(&mut grads, *x, gx);
                }
                Op::Relu(x) => {
                    let mut gx = g;
                    Zip::from(&mut gx).and(&node.value).for_each(|gx, &y| {
                        if y <= 0.0 {
                            *gx = 0.0
                        }
                    });
                    acc(&mut grads, *x, gx);
                }
                Op::Sigmoid(x) => {
                    let mut gx = g;
                    Zip::from(&mut gx)
                        .and(&node.value)
                        .for_each(|gx, &y| *gx *= y * (1.0 - y));
                    acc(&mut grads, *x, gx);
                }
                Op::ConcatCols(a, b) => {
                    let split = dims[a.0].1;
                    if needs(*a) {
                        acc(&mut grads, *a, g.slice(s![.., ..split]).to_owned());
                    }
                    if needs(*b) {
                        acc(&mut grads, *b, g.slice(s![.., split..]).to_owned());
                    }
                }
                Op::Gram(h) => {
                    let sym = &g + &g.t();
                    acc(&mut grads, *h, sym.dot(val(*h)));
                }
                Op::Sum(x) => acc(&mut grads, *x, Matrix::from_elem(dims[x.0], g[[0, 0]])),
                Op::SumSquares(x) => acc(&mut grads, *x, val(*x) * (2.0 * g[[0, 0]])),
                Op::MseConst(x, target) => {
                    let (r, c) = dims[x.0];
                    let k = 2.0 * g[[0, 0]] / (r * c) as f64;
                    acc(&mut grads, *x, (val(*x) - &**target) * k);
                }
                Op::BatchNorm {
                    x,
                    gamma,
                    beta,
                    xhat,
                    inv_std,
                } => {
                    if needs(*beta) {
                        acc(&mut grads, *beta, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    }
                    if needs(*gamma) {
                        let gg = (&g * xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
                        acc(&mut grads, *gamma, gg);
                    }
                    if needs(*x) {
                        let m = dims[x.0].0 as f64;
                        let dxhat = &g * val(*gamma);
                        let sum_d = dxhat.sum_axis(Axis(0));
                        let sum_dx = (&dxhat * xhat).sum_axis(Axis(0));
                        let mut gx = dxhat * m - &sum_d - &(xhat * &sum_dx);
                        for (mut col, &s) in gx.axis_iter_mut(Axis(1)).zip(inv_std) {
                            col *= s / m;
                        }
                        acc(&mut grads, *x, gx);
                    }
                }
                Op::SigmoidGramMse { h, score_grad } => {
                    let hv = val(*h);
                    let mut gh = score_grad.dot(hv);
                    gh += &score_grad.t().dot(hv);
                    acc(&mut grads, *h, gh * g[[0, 0]]);
                }
                Op::SoftmaxCrossEntropy {
                    logits,
                    labels,
                    probs,
                } => {
                    let n = labels.len() as f64;
                    let mut gl = probs.clone();
                    for (mut row, &y) in gl.outer_iter_mut().zip(labels.iter()) {
                        row[y] -= 1.0;
                    }
                    acc(&mut grads, *logits, gl * (g[[0, 0]] / n));
                }
            }
        }
        // only leaves keep their gradient
        for (i, node) in nodes.iter().enumerate() {
            if !matches!(node.op, Op::Leaf) || !node.requires_grad {
                grads[i] = None;
            }
        }
        Ok(Gradients { grads, dims })
    }
}
