use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub p: f64,
    pub q: f64,
    pub walk_length: usize,
    pub num_walks: usize,
}

impl WalkConfig {
    /// Return-heavy, outward-averse walks: p = 0.5, q = 2.
    pub fn structural() -> Self {
        Self {
            p: 0.5,
            q: 2.0,
            ..Self::default()
        }
    }

    /// Outward-exploring walks: p = 1, q = 0.5.
    pub fn homophily() -> Self {
        Self {
            p: 1.0,
            q: 0.5,
            ..Self::default()
        }
    }
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            q: 1.0,
            walk_length: 80,
            num_walks: 10,
        }
    }
}

/// Node sequences fed to SkipGram. Nodes are dense indices `< n_nodes`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<usize>>,
    pub n_nodes: usize,
    pub config: WalkConfig,
    pub seed: u64,
}

impl WalkCorpus {
    /// Wraps hand-built walks; `n_nodes` is one past the largest id.
    pub fn from_walks(walks: Vec<Vec<usize>>) -> Self {
        let n_nodes = walks.iter().flatten().max().map_or(0, |m| m + 1);
        Self {
            walks,
            n_nodes,
            config: WalkConfig::default(),
            seed: 0,
        }
    }

    pub fn total_tokens(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }
}

/// Second-order biased walks on the undirected projection. Each start node
/// draws its walks from its own ChaCha stream, so the corpus does not depend
/// on thread scheduling. Walks are laid out pass by pass, with the start
/// order of each pass shuffled from the master stream.
pub fn biased_random_walks(graph: &Graph, config: &WalkConfig, seed: u64) -> Result<WalkCorpus> {
    if !(config.p > 0.0 && config.q > 0.0) || !config.p.is_finite() || !config.q.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "walk parameters must be positive and finite (p={}, q={})",
            config.p, config.q
        )));
    }
    if config.walk_length == 0 {
        return Err(Error::InvalidArgument("walk_length must be positive".into()));
    }
    let n = graph.n_nodes();
    let per_node: Vec<Vec<Vec<usize>>> = (0..n)
        .into_par_iter()
        .map(|start| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(start as u64 + 1);
            (0..config.num_walks)
                .map(|_| walk_from(graph, start, config, &mut rng))
                .collect()
        })
        .collect();

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut walks = Vec::with_capacity(n * config.num_walks);
    let mut order: Vec<usize> = (0..n).collect();
    for pass in 0..config.num_walks {
        order.shuffle(&mut master);
        walks.extend(order.iter().map(|&v| per_node[v][pass].clone()));
    }
    Ok(WalkCorpus {
        walks,
        n_nodes: n,
        config: *config,
        seed,
    })
}

fn walk_from(graph: &Graph, start: usize, config: &WalkConfig, rng: &mut impl Rng) -> Vec<usize> {
    let mut walk = Vec::with_capacity(config.walk_length);
    walk.push(start);
    let mut weights = Vec::new();
    while walk.len() < config.walk_length {
        let cur = *walk.last().unwrap();
        let nbrs = graph.neighbors(cur);
        if nbrs.is_empty() {
            break;
        }
        let next = if walk.len() == 1 {
            nbrs[rng.random_range(0..nbrs.len())]
        } else {
            let prev = walk[walk.len() - 2];
            weights.clear();
            weights.extend(nbrs.iter().map(|&x| {
                if x == prev {
                    1.0 / config.p
                } else if graph.has_edge_undirected(prev, x) {
                    1.0
                } else {
                    1.0 / config.q
                }
            }));
            let total: f64 = weights.iter().sum();
            let mut r = rng.random::<f64>() * total;
            let mut pick = nbrs.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if r < *w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            nbrs[pick]
        };
        walk.push(next);
    }
    walk
}
