use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::embedding::{Embedding, EmbeddingTag};
use crate::error::Result;

/// Identity of a cached embedding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheKey {
    pub dataset: String,
    pub dataset_hash: String,
    pub model: String,
    pub config_hash: String,
    pub seed: u64,
    pub run: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    key: CacheKey,
    tag: EmbeddingTag,
}

/// Embeddings stored as `<stem>.csv` plus a `<stem>.json` sidecar holding
/// the key and provenance tag.
#[derive(Debug, Clone)]
pub struct EmbeddingCache {
    root: PathBuf,
}

impl EmbeddingCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// CSV path for `key`; the sidecar sits next to it.
    pub fn path(&self, key: &CacheKey) -> PathBuf {
        self.root.join(&key.dataset).join(&key.model).join(format!(
            "run{}_{}_{}_{:016x}.csv",
            key.run,
            &key.dataset_hash[..key.dataset_hash.len().min(12)],
            &key.config_hash[..key.config_hash.len().min(12)],
            key.seed
        ))
    }

    pub fn get(&self, key: &CacheKey, node_ids: &[String]) -> Option<Embedding> {
        let csv_path = self.path(key);
        let sidecar: Sidecar = serde_json::from_slice(&fs::read(csv_path.with_extension("json")).ok()?).ok()?;
        if sidecar.key != *key {
            return None;
        }
        let file = fs::File::open(&csv_path).ok()?;
        match Embedding::read_csv(std::io::BufReader::new(file), node_ids, sidecar.tag) {
            Ok(e) => {
                debug!("cache hit {}", csv_path.display());
                Some(e)
            }
            Err(e) => {
                warn!("ignoring unreadable cache entry {}: {e}", csv_path.display());
                None
            }
        }
    }

    pub fn put(&self, key: &CacheKey, node_ids: &[String], embedding: &Embedding) -> Result<PathBuf> {
        let csv_path = self.path(key);
        if let Some(dir) = csv_path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut buf = Vec::new();
        embedding.write_csv(node_ids, &mut buf)?;
        fs::write(&csv_path, buf)?;
        let sidecar = Sidecar {
            key: key.clone(),
            tag: embedding.tag.clone(),
        };
        fs::write(csv_path.with_extension("json"), serde_json::to_vec_pretty(&sidecar)?)?;
        Ok(csv_path)
    }
}
