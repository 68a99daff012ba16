use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Aggregation, GaeConfig, Variant};
use crate::embedding::{Embedding, EmbeddingTag};
use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, Graph, Normalization, SparseMatrix};
use crate::numkit::{glorot_uniform, Adam, Matrix, Tape, Var};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub losses: Vec<f64>,
    pub best_epoch: usize,
    pub best_loss: f64,
    pub epochs_run: usize,
}

/// Layer outputs of one forward pass. `pre1` is `operator·X·W₁` before
/// batch norm and activation.
#[derive(Debug, Clone)]
pub struct Forward {
    pub pre1: Matrix,
    pub h1: Matrix,
    pub h2: Option<Matrix>,
}

#[derive(Debug, Clone)]
pub struct GaeModel {
    config: GaeConfig,
    operator: Arc<SparseMatrix>,
    // None stands for the one-hot identity input
    input: Option<Arc<SparseMatrix>>,
    adjacency: SparseMatrix,
    proximity: Option<SparseMatrix>,
    /// w1, γ1, β1, then w2, γ2, β2 for two-layer variants.
    params: Vec<Matrix>,
    report: Option<TrainReport>,
}

struct Recorded {
    params: Vec<Var>,
    pre1: Var,
    h1: Var,
    h2: Option<Var>,
}

impl GaeModel {
    pub fn build(config: GaeConfig, graph: &Graph) -> Result<Self> {
        config.validate()?;
        let ahat = graph.augmented_adjacency();
        let operator = match config.variant.aggregation() {
            Aggregation::Sum => ahat,
            Aggregation::Mean => normalize_adjacency(&ahat, Normalization::Mean)?,
            Aggregation::Spectral => normalize_adjacency(&ahat, Normalization::Spectral)?,
        };
        let input = graph.attributes().map(|x| Arc::new(x.clone()));
        let in_dim = input.as_ref().map_or(graph.n_nodes(), |x| x.cols());
        let proximity = if config.variant == Variant::Mixed {
            Some(graph.proximity_power(config.proximity_k)?)
        } else {
            None
        };

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = vec![
            glorot_uniform(in_dim, config.hidden_dim, &mut rng),
            Matrix::ones((1, config.hidden_dim)),
            Matrix::zeros((1, config.hidden_dim)),
        ];
        if config.variant.layers() == 2 {
            params.push(glorot_uniform(config.hidden_dim, config.out_dim, &mut rng));
            params.push(Matrix::ones((1, config.out_dim)));
            params.push(Matrix::zeros((1, config.out_dim)));
        }
        Ok(Self {
            config,
            operator: Arc::new(operator),
            input,
            adjacency: graph.adjacency(),
            proximity,
            params,
            report: None,
        })
    }

    pub fn config(&self) -> &GaeConfig {
        &self.config
    }

    pub fn n_nodes(&self) -> usize {
        self.operator.rows()
    }

    pub fn operator(&self) -> &SparseMatrix {
        &self.operator
    }

    pub fn w1(&self) -> &Matrix {
        &self.params[0]
    }

    pub fn w2(&self) -> Option<&Matrix> {
        self.params.get(3)
    }

    pub fn report(&self) -> Option<&TrainReport> {
        self.report.as_ref()
    }

    /// Replaces the weight matrices, keeping shapes.
    pub fn set_weights(&mut self, w1: Matrix, w2: Option<Matrix>) -> Result<()> {
        if w1.dim() != self.params[0].dim() {
            return Err(Error::Shape("W1 shape mismatch".into()));
        }
        match (w2, self.params.get(3).map(|w| w.dim())) {
            (Some(w), Some(d)) if w.dim() == d => self.params[3] = w,
            (None, None) => {}
            _ => return Err(Error::Shape("W2 shape mismatch".into())),
        }
        self.params[0] = w1;
        Ok(())
    }

    /// `w1, γ1, β1` then `w2, γ2, β2` for two-layer variants.
    pub fn params(&self) -> &[Matrix] {
        &self.params
    }

    /// Replaces every parameter; count and shapes must match [`Self::params`].
    pub fn set_params(&mut self, params: Vec<Matrix>) -> Result<()> {
        if params.len() != self.params.len() || params.iter().zip(&self.params).any(|(a, b)| a.dim() != b.dim()) {
            return Err(Error::Shape("parameter list does not match the model".into()));
        }
        self.params = params;
        Ok(())
    }

    /// Rows of `X·W₁`: the weight vector each node contributes as a message.
    pub fn message_weights(&self) -> Result<Matrix> {
        match &self.input {
            None => Ok(self.params[0].clone()),
            Some(x) => x.matmul_dense(self.params[0].view()),
        }
    }

    fn layer(&self, tape: &mut Tape, x: Var, gamma: Var, beta: Var) -> Result<(Var, Var)> {
        let pre = tape.spmm(self.operator.clone(), x)?;
        let normed = if self.config.batch_norm {
            tape.batch_norm(pre, gamma, beta)?
        } else {
            pre
        };
        Ok((pre, tape.tanh(normed)?))
    }

    fn record(&self, tape: &mut Tape) -> Result<Recorded> {
        let params: Vec<Var> = self.params.iter().map(|p| tape.param(p.clone())).collect();
        self.record_with(tape, &params)
    }

    fn record_with(&self, tape: &mut Tape, params: &[Var]) -> Result<Recorded> {
        let xw = match &self.input {
            None => params[0],
            Some(x) => tape.spmm(x.clone(), params[0])?,
        };
        let (pre1, h1) = self.layer(tape, xw, params[1], params[2])?;
        let h2 = if self.config.variant.layers() == 2 {
            let hw = tape.matmul(h1, params[3])?;
            Some(self.layer(tape, hw, params[4], params[5])?.1)
        } else {
            None
        };
        Ok(Recorded {
            params: params.to_vec(),
            pre1,
            h1,
            h2,
        })
    }

    fn loss_on(&self, tape: &mut Tape, rec: &Recorded) -> Result<Var> {
        match (self.config.variant, rec.h2) {
            (Variant::L1Sum, _) => tape.sigmoid_gram_mse(rec.h1, &self.adjacency),
            (Variant::Mixed, Some(h2)) => {
                let target = self.proximity.as_ref().expect("MIXED builds its proximity target");
                let first = tape.sigmoid_gram_mse(rec.h1, &self.adjacency)?;
                let second = tape.sigmoid_gram_mse(h2, target)?;
                let second = tape.scale(second, self.config.alpha)?;
                tape.add(first, second)
            }
            (_, Some(h2)) => tape.sigmoid_gram_mse(h2, &self.adjacency),
            (_, None) => unreachable!("two-layer variants always record H2"),
        }
    }

    pub fn forward(&self) -> Result<Forward> {
        let mut tape = Tape::new();
        let rec = self.record(&mut tape)?;
        Ok(Forward {
            pre1: tape.value(rec.pre1).clone(),
            h1: tape.value(rec.h1).clone(),
            h2: rec.h2.map(|h| tape.value(h).clone()),
        })
    }

    /// Reconstruction loss at the current weights.
    pub fn decoder_loss(&self) -> Result<f64> {
        let mut tape = Tape::new();
        let rec = self.record(&mut tape)?;
        let loss = self.loss_on(&mut tape, &rec)?;
        Ok(tape.value(loss)[[0, 0]])
    }

    /// Loss and gradients for every parameter, in `params` order.
    pub fn loss_and_gradients(&self) -> Result<(f64, Vec<Matrix>)> {
        let mut tape = Tape::new();
        let rec = self.record(&mut tape)?;
        let loss = self.loss_on(&mut tape, &rec)?;
        let value = tape.value(loss)[[0, 0]];
        let mut grads = tape.backward(loss)?;
        Ok((value, rec.params.iter().map(|&p| grads.take(p)).collect()))
    }

    /// Full-batch Adam until the loss stops improving by `min_delta` for
    /// `patience` epochs; the best weights seen are restored.
    pub fn train(&mut self) -> Result<&TrainReport> {
        let mut adam = Adam::new(self.config.lr);
        let mut losses = Vec::new();
        let mut best = (f64::INFINITY, 0usize, self.params.clone());
        let mut stale = 0;
        for epoch in 0..self.config.max_epochs {
            let (loss, grads) = self.loss_and_gradients()?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            losses.push(loss);
            if loss < best.0 - self.config.min_delta {
                best = (loss, epoch, self.params.clone());
                stale = 0;
            } else {
                stale += 1;
                if stale >= self.config.patience {
                    break;
                }
            }
            let mut refs: Vec<&mut Matrix> = self.params.iter_mut().collect();
            adam.step(&mut refs, &grads)?;
        }
        self.params = best.2;
        log::debug!(
            "{} seed {}: {} epochs, best loss {:.6} at epoch {}",
            self.config.variant.model_name(),
            self.config.seed,
            losses.len(),
            best.0,
            best.1
        );
        self.report = Some(TrainReport {
            epochs_run: losses.len(),
            losses,
            best_epoch: best.1,
            best_loss: best.0,
        });
        Ok(self.report.as_ref().unwrap())
    }

    /// The variant's embedding from the trained weights.
    pub fn extract_embedding(&self) -> Result<Embedding> {
        let report = self.report.as_ref().ok_or(Error::Untrained)?;
        let fwd = self.forward()?;
        let z = match self.config.variant {
            Variant::L1Sum | Variant::First => fwd.h1,
            Variant::Concat => ndarray::concatenate(
                ndarray::Axis(1),
                &[fwd.h1.view(), fwd.h2.as_ref().expect("two layers").view()],
            )
            .map_err(|e| Error::Shape(e.to_string()))?,
            _ => fwd.h2.expect("two layers"),
        };
        let tag = EmbeddingTag::new(
            self.config.variant.model_name(),
            self.config.seed,
            0,
            serde_json::json!({
                "config": self.config,
                "init": "glorot_uniform",
                "epochs_run": report.epochs_run,
                "best_epoch": report.best_epoch,
                "final_loss": report.best_loss,
            }),
        );
        Embedding::new(z, tag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::gradcheck::max_relative_error;

    fn k3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)], false).unwrap()
    }

    fn zeroed(variant: Variant) -> GaeModel {
        let mut m = GaeModel::build(GaeConfig::new(variant, 1), &k3()).unwrap();
        for p in m.params.iter_mut() {
            p.fill(0.0);
        }
        m
    }

    #[test]
    fn zero_embedding_loss_on_triangle() {
        // γ = 0 makes every layer output exactly zero
        assert!((zeroed(Variant::L2Sum).decoder_loss().unwrap() - 0.25).abs() < 1e-15);
        assert!((zeroed(Variant::L1Sum).decoder_loss().unwrap() - 0.25).abs() < 1e-15);
        assert!((zeroed(Variant::Mixed).decoder_loss().unwrap() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn identity_weights_without_batch_norm() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)], false).unwrap();
        let mut cfg = GaeConfig::new(Variant::L1Sum, 0);
        cfg.hidden_dim = 4;
        cfg.batch_norm = false;
        let mut m = GaeModel::build(cfg, &g).unwrap();
        m.set_weights(Matrix::eye(4), None).unwrap();
        let h1 = m.forward().unwrap().h1;
        let want = g.augmented_adjacency().to_dense().mapv(f64::tanh);
        assert_eq!(h1, want);
    }

    #[test]
    fn shapes_per_variant() {
        let edges: Vec<_> = (0..20).map(|i| (i, (i * 7 + 3) % 20)).collect();
        let g = Graph::from_edges(20, &edges, false).unwrap();
        for v in Variant::ALL {
            let mut m = GaeModel::build(GaeConfig::new(v, 3), &g).unwrap();
            assert_eq!(m.w1().dim(), (20, GaeConfig::new(v, 3).hidden_dim));
            assert_eq!(m.w2().is_some(), v != Variant::L1Sum);
            assert!(matches!(m.extract_embedding(), Err(Error::Untrained)));
            m.config.max_epochs = 3;
            m.config.patience = 2;
            m.train().unwrap();
            let z = m.extract_embedding().unwrap();
            assert_eq!(z.matrix.dim(), (20, 64), "{v}");
            assert!(z.matrix.iter().all(|x| x.abs() < 1.0));
        }
    }

    #[test]
    fn attributes_set_input_width() {
        let g = k3()
            .with_attributes(SparseMatrix::from_triplets(3, 5, [(0, 1, 1.0), (1, 4, 1.0), (2, 0, 1.0)]).unwrap())
            .unwrap();
        let m = GaeModel::build(GaeConfig::new(Variant::Mean, 0), &g).unwrap();
        assert_eq!(m.w1().dim(), (5, 64));
    }

    #[test]
    fn first_and_concat_share_first_layer() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)], false).unwrap();
        let mut first = GaeConfig::new(Variant::First, 9);
        first.hidden_dim = 32;
        first.out_dim = 32;
        let a = GaeModel::build(first, &g).unwrap().forward().unwrap();
        let b = GaeModel::build(GaeConfig::new(Variant::Concat, 9), &g).unwrap().forward().unwrap();
        assert_eq!(a.h1, b.h1);
    }

    #[test]
    fn training_beats_zero_baseline_and_is_deterministic() {
        let run = |v| {
            let mut m = GaeModel::build(GaeConfig::new(v, 4), &k3()).unwrap();
            m.train().unwrap();
            m
        };
        let a = run(Variant::L2Sum);
        let b = run(Variant::L2Sum);
        let f = run(Variant::First);
        assert_eq!(a.params, b.params);
        assert_eq!(a.params, f.params);
        let r = a.report().unwrap();
        assert!(r.best_loss < 0.25);
        assert!(r.best_loss <= r.losses[0]);
        assert!((a.decoder_loss().unwrap() - r.best_loss).abs() < 1e-12);
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5)], false).unwrap();
        for v in [Variant::L2Sum, Variant::Mixed, Variant::Spectral, Variant::L1Sum] {
            let mut cfg = GaeConfig::new(v, 2);
            cfg.hidden_dim = 4;
            cfg.out_dim = 3;
            let model = GaeModel::build(cfg, &g).unwrap();
            let err = max_relative_error(&model.params, 1e-5, |tape, vars| {
                let rec = model.record_with(tape, vars)?;
                model.loss_on(tape, &rec)
            })
            .unwrap();
            assert!(err < 1e-4, "{v}: {err}");
        }
    }

    #[test]
    fn permutation_equivariant_loss() {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (3, 4)];
        let perm = [3, 0, 4, 1, 2];
        let g = Graph::from_edges(5, &edges, false).unwrap();
        let pe: Vec<_> = edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        let gp = Graph::from_edges(5, &pe, false).unwrap();
        let m = GaeModel::build(GaeConfig::new(Variant::Mean, 1), &g).unwrap();
        let mut mp = GaeModel::build(GaeConfig::new(Variant::Mean, 1), &gp).unwrap();
        let mut w1 = m.w1().clone();
        for (i, &p) in perm.iter().enumerate() {
            w1.row_mut(p).assign(&m.w1().row(i));
        }
        mp.set_weights(w1, m.w2().cloned()).unwrap();
        assert!((m.decoder_loss().unwrap() - mp.decoder_loss().unwrap()).abs() < 1e-12);
    }
}
