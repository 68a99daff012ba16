//! Experiment orchestration: dataset registry, embedding grid with an
//! on-disk cache, downstream tasks, raw records and rendered reports.
//!
//! Output layout under the configured directory:
//!
//! ```text
//! topo/<dataset>.csv            per-node features and classes
//! cache/embeddings/...          embedding CSVs with JSON sidecars
//! raw/<task>.csv                one row per measured value
//! aggregated.csv                mean and sample std per cell
//! reports/<task>_<dataset>.*    rendered tables (markdown and CSV)
//! tsne/<dataset>/<model>.csv    2-D projections (run 0)
//! manifest.json                 seeds, hashes and status of every job
//! ```

mod cache;
mod config;
mod data;
mod embedder;
mod records;
mod runner;
mod seeds;

pub use cache::{CacheKey, EmbeddingCache};
pub use config::{
    ClusterSettings, DatasetEntry, EmbedSettings, ExperimentConfig, GaeOverrides, ModelKind, ProbeSettings, Registry,
    Task,
};
pub use data::{load_dataset, verify_dataset, Dataset, FileCheck};
pub use embedder::EmbedderSpec;
pub use records::{
    aggregate_runs, emit_report, lower_is_better, read_records, write_records, Cell, CellStatus, Record, ReportFormat,
    ReportTable,
};
pub use runner::{enumerate_jobs, run_experiment, Failure, JobSpec, Outcome, Pipeline};
pub use seeds::{derive_seed, sha256_hex, sub_seed};
