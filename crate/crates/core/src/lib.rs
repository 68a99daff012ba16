//! Graph representation-learning lab.
//!
//! Trains seven graph-autoencoder variants plus Laplacian Eigenmaps and
//! biased-random-walk SkipGram embedders, then probes which per-node
//! topological features (degree, triangles, local clustering, eigenvector
//! and betweenness centrality) each embedding encodes, and how that
//! carries over to clustering and node classification.
//!
//! Module map:
//! - [`graph`]: ingestion, sparse operands (Â, normalizations, A^k).
//! - [`topo`]: the five topological features and histogram binning.
//! - [`numkit`]: tape-based reverse-mode autodiff, batch norm, Adam.
//! - [`classic`]: Laplacian Eigenmaps and Node2Vec-style SkipGram.
//! - [`gae`]: the autoencoder variants, training, and the SUM-rule diagnostic.
//! - [`probe`]: cross-validated regression / classification probes.
//! - [`eval`]: k-means, FINCH, clustering metrics, F1 scores, t-SNE.
//! - [`pipeline`]: config-driven experiment grid, caching, and reports.

pub mod classic;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod gae;
pub mod graph;
pub mod numkit;
pub mod pipeline;
pub mod probe;
pub mod stats;
pub mod topo;

pub use embedding::{Embedding, EmbeddingTag};
pub use error::{Error, Result};
pub use graph::{Graph, SparseMatrix};
