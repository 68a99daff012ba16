use serde_json::{json, Value};

use super::config::{EmbedSettings, ModelKind};
use super::seeds::sha256_hex;
use crate::classic::{biased_random_walks, laplacian_eigenmaps, skipgram_train, SkipGramConfig, WalkConfig};
use crate::embedding::{Embedding, EmbeddingTag};
use crate::error::Result;
use crate::gae::{GaeConfig, GaeModel, Variant};
use crate::graph::Graph;

/// A model with every hyperparameter resolved, minus the seed.
#[derive(Debug, Clone, PartialEq)]
pub enum EmbedderSpec {
    Gae(GaeConfig),
    Laplacian { dim: usize },
    Node2Vec { name: String, walks: WalkConfig, skipgram: SkipGramConfig },
}

impl EmbedderSpec {
    pub fn resolve(model: ModelKind, settings: &EmbedSettings) -> Self {
        let dim = settings.dim;
        match model {
            ModelKind::Gae(variant) => {
                let mut c = GaeConfig::new(variant, 0);
                if variant == Variant::Concat {
                    c.hidden_dim = dim / 2;
                    c.out_dim = dim - dim / 2;
                } else {
                    c.hidden_dim = dim;
                    c.out_dim = dim;
                }
                let o = settings.gae;
                c.lr = o.lr.unwrap_or(c.lr);
                c.max_epochs = o.max_epochs.unwrap_or(c.max_epochs);
                c.patience = o.patience.unwrap_or(c.patience);
                c.min_delta = o.min_delta.unwrap_or(c.min_delta);
                c.alpha = o.alpha.unwrap_or(c.alpha);
                c.proximity_k = o.proximity_k.unwrap_or(c.proximity_k);
                c.batch_norm = o.batch_norm.unwrap_or(c.batch_norm);
                EmbedderSpec::Gae(c)
            }
            ModelKind::LaplacianEigenmaps => EmbedderSpec::Laplacian { dim },
            ModelKind::Node2VecStructural | ModelKind::Node2VecHomophily => {
                let base = if model == ModelKind::Node2VecStructural {
                    WalkConfig::structural()
                } else {
                    WalkConfig::homophily()
                };
                EmbedderSpec::Node2Vec {
                    name: model.name(),
                    walks: WalkConfig {
                        walk_length: settings.walk_length,
                        num_walks: settings.num_walks,
                        ..base
                    },
                    skipgram: SkipGramConfig {
                        dim,
                        track_loss: false,
                        ..settings.skipgram
                    },
                }
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            EmbedderSpec::Gae(c) => {
                let mut v = serde_json::to_value(c).expect("config serializes");
                if let Some(obj) = v.as_object_mut() {
                    obj.remove("seed");
                }
                json!({ "model": c.variant.model_name(), "gae": v })
            }
            EmbedderSpec::Laplacian { dim } => json!({ "model": "LE", "dim": dim }),
            EmbedderSpec::Node2Vec { name, walks, skipgram } => {
                json!({ "model": name, "walks": walks, "skipgram": skipgram })
            }
        }
    }

    /// Hash of the resolved hyperparameters; part of the cache key.
    pub fn config_hash(&self) -> String {
        sha256_hex(self.to_json().to_string().as_bytes())
    }

    pub fn run(&self, graph: &Graph, seed: u64, run: usize) -> Result<Embedding> {
        let mut emb = match self {
            EmbedderSpec::Gae(c) => {
                let mut model = GaeModel::build(GaeConfig { seed, ..c.clone() }, graph)?;
                model.train()?;
                model.extract_embedding()?
            }
            EmbedderSpec::Laplacian { dim } => laplacian_eigenmaps(graph, *dim)?,
            EmbedderSpec::Node2Vec { name, walks, skipgram } => {
                let corpus = biased_random_walks(graph, walks, seed)?;
                let mut e = skipgram_train(&corpus, skipgram, seed)?.embedding;
                e.tag.model = name.clone();
                e
            }
        };
        emb.tag = EmbeddingTag::new(emb.tag.model.clone(), seed, run, emb.tag.hyperparameters.clone());
        Ok(emb)
    }
}
