//! Clustering, clustering-quality metrics, F1 scores and t-SNE.

mod external;
mod finch;
mod internal;
mod kmeans;
mod scores;
mod tsne;

pub use external::{adjusted_rand_index, clustering_accuracy, external_metrics, normalized_mutual_info, ExternalMetrics};
pub use finch::{finch, nearest_level};
pub use internal::{calinski_harabasz, davies_bouldin, internal_metrics, silhouette, InternalMetrics};
pub use kmeans::{kmeans, KMEANS_MAX_ITER, KMEANS_TOL};
pub use scores::{classification_scores, ClassificationScores};
pub use tsne::{tsne_project, TsneConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard assignment of points to clusters `0..k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub assignments: Vec<usize>,
    pub k: usize,
    pub inertia: Option<f64>,
}

impl Partition {
    /// Renumbers ids to `0..k` in order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let assignments: Vec<usize> = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self {
            k: map.len(),
            assignments,
            inertia: None,
        }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

pub(crate) fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("length mismatch: {a} vs {b}")));
    }
    Ok(())
}
