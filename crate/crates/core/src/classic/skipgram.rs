use ndarray::{Array2, ArrayView1};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::walks::WalkCorpus;
use crate::embedding::{Embedding, EmbeddingTag};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Evaluate the full corpus objective after every epoch.
    pub track_loss: bool,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            window: 10,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            track_loss: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SkipGramOutput {
    pub embedding: Embedding,
    /// Mean negative-sampling loss per (center, context) pair over the whole
    /// corpus at the end of each epoch, with the same negatives every epoch.
    /// Empty unless `track_loss` is set.
    pub epoch_losses: Vec<f64>,
}

/// All `(center, context)` index pairs of one walk within `window`.
pub fn window_pairs(walk: &[usize], window: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (i, &center) in walk.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(walk.len() - 1);
        for (j, &ctx) in walk.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i {
                pairs.push((center, ctx));
            }
        }
    }
    pairs
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Skip-gram with negative sampling over the corpus; single-threaded so a
/// seed fixes the result. The learning rate decays linearly to `lr·1e-4`
/// over all epochs. The returned embedding is the center table.
pub fn skipgram_train(corpus: &WalkCorpus, config: &SkipGramConfig, seed: u64) -> Result<SkipGramOutput> {
    let (center, _, epoch_losses) = train_tables(corpus, config, seed)?;
    let tag = EmbeddingTag::new(
        "SkipGram",
        seed,
        0,
        serde_json::json!({
            "dim": config.dim,
            "window": config.window,
            "negatives": config.negatives,
            "epochs": config.epochs,
            "lr": config.lr,
            "p": corpus.config.p,
            "q": corpus.config.q,
            "walk_length": corpus.config.walk_length,
            "num_walks": corpus.config.num_walks,
        }),
    );
    Ok(SkipGramOutput {
        embedding: Embedding::new(center, tag)?,
        epoch_losses,
    })
}

fn corpus_loss(
    center: &Array2<f64>,
    context: &Array2<f64>,
    corpus: &WalkCorpus,
    config: &SkipGramConfig,
    noise: &WeightedIndex<f64>,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let (mut total, mut pairs) = (0.0, 0usize);
    for walk in corpus.walks.iter().filter(|w| w.len() > 1) {
        for (c, ctx) in window_pairs(walk, config.window) {
            let u = center.row(c);
            total -= log_sigmoid(u.dot(&context.row(ctx)));
            for _ in 0..config.negatives {
                let t = noise.sample(&mut rng);
                if t != ctx {
                    total -= log_sigmoid(-u.dot(&context.row(t)));
                }
            }
            pairs += 1;
        }
    }
    total / pairs.max(1) as f64
}

type Tables = (Array2<f64>, Array2<f64>, Vec<f64>);

fn train_tables(corpus: &WalkCorpus, config: &SkipGramConfig, seed: u64) -> Result<Tables> {
    if corpus.total_tokens() == 0 {
        return Err(Error::EmptyInput);
    }
    if config.dim == 0 || config.window == 0 || config.epochs == 0 {
        return Err(Error::InvalidArgument("skipgram dim, window and epochs must be positive".into()));
    }
    let n = corpus.n_nodes;
    let d = config.dim;
    let mut counts = vec![0usize; n];
    for &v in corpus.walks.iter().flatten() {
        counts[v] += 1;
    }
    let noise = WeightedIndex::new(counts.iter().map(|&c| (c as f64).powf(0.75)))
        .map_err(|e| Error::InvalidArgument(format!("negative-sampling table: {e}")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut center = Array2::from_shape_simple_fn((n, d), || (rng.random::<f64>() - 0.5) / d as f64);
    let mut context = Array2::<f64>::zeros((n, d));

    let pairs_per_epoch: usize = corpus
        .walks
        .iter()
        .filter(|w| w.len() > 1)
        .map(|w| window_pairs(w, config.window).len())
        .sum();
    let total = (pairs_per_epoch * config.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut grad = vec![0.0; d];

    for _ in 0..config.epochs {
        let cs = center.as_slice_mut().expect("standard layout");
        let xs = context.as_slice_mut().expect("standard layout");
        for walk in corpus.walks.iter().filter(|w| w.len() > 1) {
            for (c, ctx) in window_pairs(walk, config.window) {
                let lr = config.lr * (1.0 - processed as f64 / total).max(1e-4);
                processed += 1;
                grad.iter_mut().for_each(|g| *g = 0.0);
                let u = &cs[c * d..(c + 1) * d];
                for k in 0..=config.negatives {
                    let (target, label) = if k == 0 {
                        (ctx, 1.0)
                    } else {
                        let t = noise.sample(&mut rng);
                        if t == ctx {
                            continue;
                        }
                        (t, 0.0)
                    };
                    let v = &mut xs[target * d..(target + 1) * d];
                    let score = ArrayView1::from(u).dot(&ArrayView1::from(&*v));
                    let g = (label - sigmoid(score)) * lr;
                    for ((gi, vi), ui) in grad.iter_mut().zip(v.iter_mut()).zip(u) {
                        *gi += g * *vi;
                        *vi += g * ui;
                    }
                }
                for (ui, gi) in cs[c * d..(c + 1) * d].iter_mut().zip(&grad) {
                    *ui += gi;
                }
            }
        }
        if config.track_loss {
            epoch_losses.push(corpus_loss(&center, &context, corpus, config, &noise, seed));
        }
    }

    Ok((center, context, epoch_losses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classic::{biased_random_walks, WalkConfig};
    use crate::graph::Graph;

    fn cosine(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
        a.dot(&b) / (a.dot(&a).sqrt() * b.dot(&b).sqrt())
    }

    #[test]
    fn window_enumeration() {
        let pairs = window_pairs(&[0, 1, 2, 3], 2);
        for want in [(1, 0), (1, 2), (1, 3)] {
            assert!(pairs.contains(&want));
        }
        assert!(!pairs.contains(&(0, 3)));
        assert_eq!(pairs.len(), 10);
    }

    #[test]
    fn one_row_per_vocabulary_node() {
        let corpus = WalkCorpus::from_walks(vec![vec![0, 1, 2, 3, 4], vec![4, 3, 2]]);
        let cfg = SkipGramConfig { dim: 8, epochs: 1, ..Default::default() };
        let out = skipgram_train(&corpus, &cfg, 1).unwrap();
        assert_eq!(out.embedding.matrix.dim(), (5, 8));
    }

    fn two_cliques() -> Graph {
        let mut edges = Vec::new();
        for base in [0, 6] {
            for i in 0..6 {
                for j in i + 1..6 {
                    edges.push((base + i, base + j));
                }
            }
        }
        Graph::from_edges(12, &edges, false).unwrap()
    }

    #[test]
    fn disconnected_cliques_separate() {
        let g = two_cliques();
        let corpus = biased_random_walks(&g, &WalkConfig { walk_length: 20, ..WalkConfig::default() }, 3).unwrap();
        let cfg = SkipGramConfig { dim: 16, window: 5, ..Default::default() };
        let z = skipgram_train(&corpus, &cfg, 4).unwrap().embedding.matrix;
        let (mut intra, mut inter) = (Vec::new(), Vec::new());
        for i in 0..12 {
            for j in i + 1..12 {
                let s = cosine(z.row(i), z.row(j));
                if (i < 6) == (j < 6) {
                    intra.push(s);
                } else {
                    inter.push(s);
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&intra) > mean(&inter) + 0.2, "{} vs {}", mean(&intra), mean(&inter));
    }

    fn planted_partition(blocks: usize, size: usize, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = blocks * size;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let p = if i / size == j / size { 0.3 } else { 0.01 };
                if rng.random_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        Graph::from_edges(n, &edges, false).unwrap()
    }

    #[test]
    fn epoch_loss_mostly_decreases() {
        let g = planted_partition(5, 30, 1);
        let corpus = biased_random_walks(&g, &WalkConfig { walk_length: 40, ..WalkConfig::structural() }, 8).unwrap();
        let cfg = SkipGramConfig { dim: 16, epochs: 10, track_loss: true, ..Default::default() };
        let losses = skipgram_train(&corpus, &cfg, 9).unwrap().epoch_losses;
        let violations = losses.windows(2).filter(|w| w[1] > w[0]).count();
        assert!(violations as f64 <= 0.05 * (losses.len() - 1) as f64, "{losses:?}");
    }

    #[test]
    fn deterministic() {
        let corpus = WalkCorpus::from_walks(vec![vec![0, 1, 2, 1, 0], vec![2, 3, 2]]);
        let cfg = SkipGramConfig { dim: 4, ..Default::default() };
        let a = skipgram_train(&corpus, &cfg, 5).unwrap();
        let b = skipgram_train(&corpus, &cfg, 5).unwrap();
        assert_eq!(a.embedding.matrix, b.embedding.matrix);
        assert!(a.epoch_losses.is_empty());
    }

    #[test]
    fn empty_corpus_rejected() {
        let corpus = WalkCorpus::from_walks(vec![]);
        assert!(skipgram_train(&corpus, &SkipGramConfig::default(), 0).is_err());
    }
}
