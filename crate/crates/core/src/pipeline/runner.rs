use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::Serialize;

use super::cache::{CacheKey, EmbeddingCache};
use super::config::{ExperimentConfig, ModelKind, Registry, Task};
use super::data::{load_dataset, verify_dataset, Dataset, FileCheck};
use super::embedder::EmbedderSpec;
use super::records::{aggregate_runs, emit_report, read_records, write_records, Record, ReportFormat};
use super::seeds::{derive_seed, sha256_hex, sub_seed};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::eval::{external_metrics, finch, internal_metrics, kmeans, nearest_level, tsne_project};
use crate::probe::{classification_probe, regression_probe, ProbeKind, ProbeResult, ProbeSpec};
use crate::topo::{Feature, TopoTable};

/// One (dataset, model, run) cell of the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobSpec {
    pub dataset: String,
    pub model: ModelKind,
    pub run: usize,
    pub seed: u64,
    pub model_config_hash: String,
    pub model_config: serde_json::Value,
}

/// Every cell of the grid, dataset-major, in config order.
pub fn enumerate_jobs(config: &ExperimentConfig) -> Vec<JobSpec> {
    let mut jobs = Vec::new();
    for dataset in &config.datasets {
        for &model in &config.models {
            let spec = EmbedderSpec::resolve(model, &config.embedding);
            let (hash, json) = (spec.config_hash(), spec.to_json());
            for run in 0..config.runs {
                jobs.push(JobSpec {
                    dataset: dataset.clone(),
                    model,
                    run,
                    seed: derive_seed(config.master_seed, dataset, &model.name(), run),
                    model_config_hash: hash.clone(),
                    model_config: json.clone(),
                });
            }
        }
    }
    jobs
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub dataset: String,
    pub model: String,
    pub run: Option<usize>,
    pub stage: String,
    pub message: String,
}

/// Result of a pipeline command. Any failure means the grid is partial.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub records: Vec<Record>,
    pub failures: Vec<Failure>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    fn absorb(&mut self, other: Outcome) {
        self.records.extend(other.records);
        self.failures.extend(other.failures);
        self.files.extend(other.files);
    }
}

struct Prepared {
    dataset: Dataset,
    topo: std::result::Result<TopoTable, String>,
}

#[derive(Serialize)]
struct DatasetInfo<'a> {
    name: &'a str,
    hash: &'a str,
    n_nodes: usize,
    n_edges: usize,
    n_labels: usize,
    files: &'a [FileCheck],
}

#[derive(Serialize)]
struct JobEntry<'a> {
    #[serde(flatten)]
    spec: &'a JobSpec,
    dataset_hash: &'a str,
    cache_file: Option<String>,
    status: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_hash: String,
    config: &'a ExperimentConfig,
    tasks: Vec<&'static str>,
    datasets: Vec<DatasetInfo<'a>>,
    jobs: Vec<JobEntry<'a>>,
    failures: &'a [Failure],
}

/// Runs the experiment grid described by an [`ExperimentConfig`].
pub struct Pipeline {
    config: ExperimentConfig,
    registry: Registry,
    out: PathBuf,
    cache: EmbeddingCache,
    pool: rayon::ThreadPool,
}

struct JobOutput {
    records: Vec<Record>,
    failures: Vec<Failure>,
    cache_file: Option<PathBuf>,
    files: Vec<PathBuf>,
}

impl Pipeline {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let registry = Registry::load(&config.registry_path())?;
        for d in &config.datasets {
            registry.entry(d)?;
        }
        let out = config.output_path();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        Ok(Self {
            cache: EmbeddingCache::new(out.join("cache").join("embeddings")),
            config,
            registry,
            out,
            pool,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn output_dir(&self) -> &Path {
        &self.out
    }

    /// Checks that every dataset file exists and matches its listed digest.
    pub fn fetch(&self) -> Result<Vec<(String, Vec<FileCheck>)>> {
        self.config
            .datasets
            .iter()
            .map(|d| Ok((d.clone(), verify_dataset(&self.registry, d)?)))
            .collect()
    }

    fn prepare(&self, with_topo: bool) -> Result<Vec<Prepared>> {
        let datasets: Vec<Dataset> = self
            .config
            .datasets
            .iter()
            .map(|d| load_dataset(&self.registry, d))
            .collect::<Result<_>>()?;
        let settings = self.config.topo;
        Ok(self.pool.install(|| {
            datasets
                .into_par_iter()
                .map(|dataset| {
                    let topo = if with_topo {
                        info!("{}: {} nodes, computing topological features", dataset.name, dataset.graph.n_nodes());
                        TopoTable::compute(&dataset.graph, &settings).map_err(|e| e.to_string())
                    } else {
                        Err("not computed".to_string())
                    };
                    Prepared { dataset, topo }
                })
                .collect()
        }))
    }

    fn write_topo(&self, prepared: &[Prepared], outcome: &mut Outcome) -> Result<()> {
        let dir = self.out.join("topo");
        fs::create_dir_all(&dir)?;
        for p in prepared {
            if let Ok(t) = &p.topo {
                let path = dir.join(format!("{}.csv", p.dataset.name));
                let mut buf = Vec::new();
                t.write_csv(p.dataset.graph.node_ids(), &mut buf)?;
                fs::write(&path, buf)?;
                outcome.files.push(path);
            }
        }
        Ok(())
    }

    fn topo_failures(prepared: &[Prepared]) -> Vec<Failure> {
        prepared
            .iter()
            .filter_map(|p| {
                p.topo.as_ref().err().map(|msg| Failure {
                    dataset: p.dataset.name.clone(),
                    model: String::new(),
                    run: None,
                    stage: "topo".into(),
                    message: msg.clone(),
                })
            })
            .collect()
    }

    /// Computes and writes the per-dataset feature tables.
    pub fn topo(&self) -> Result<Outcome> {
        let prepared = self.prepare(true)?;
        let mut outcome = Outcome {
            failures: Self::topo_failures(&prepared),
            ..Outcome::default()
        };
        self.write_topo(&prepared, &mut outcome)?;
        Ok(outcome)
    }

    /// Trains (or loads) every embedding of the grid.
    pub fn embed(&self) -> Result<Outcome> {
        self.run_tasks(&[], "embed")
    }

    /// Embeds every cell and runs `tasks` on it, writing `raw/<task>.csv`
    /// for each record-producing task and the manifest.
    pub fn run_tasks(&self, tasks: &[Task], command: &str) -> Result<Outcome> {
        let prepared = self.prepare(tasks.iter().any(|t| matches!(t, Task::Topo | Task::Tsne)))?;
        self.execute(&prepared, tasks, command)
    }

    fn execute(&self, prepared: &[Prepared], tasks: &[Task], command: &str) -> Result<Outcome> {
        let mut outcome = Outcome::default();
        if tasks.iter().any(|t| matches!(t, Task::Topo | Task::Tsne)) {
            outcome.failures = Self::topo_failures(prepared);
        }
        for p in prepared {
            if p.dataset.graph.labels().is_none() {
                for t in tasks.iter().filter(|t| matches!(t, Task::Homogeneity | Task::Cluster | Task::Classify)) {
                    warn!("{}: no ground-truth labels, skipping {}", p.dataset.name, t.name());
                }
            }
        }
        let jobs = enumerate_jobs(&self.config);
        let outputs: Vec<JobOutput> = self.pool.install(|| {
            jobs.par_iter()
                .map(|job| {
                    let p = prepared.iter().find(|p| p.dataset.name == job.dataset).expect("dataset prepared");
                    self.run_job(job, p, tasks)
                })
                .collect()
        });

        let mut entries = Vec::new();
        for (job, o) in jobs.iter().zip(&outputs) {
            let ds = prepared.iter().find(|p| p.dataset.name == job.dataset).expect("dataset prepared");
            entries.push(JobEntry {
                spec: job,
                dataset_hash: &ds.dataset.hash,
                cache_file: o
                    .cache_file
                    .as_ref()
                    .map(|f| f.strip_prefix(&self.out).unwrap_or(f).to_string_lossy().into_owned()),
                status: if o.failures.is_empty() { "ok" } else { "failed" },
            });
        }
        for o in &outputs {
            outcome.records.extend(o.records.iter().cloned());
            outcome.failures.extend(o.failures.iter().cloned());
            outcome.files.extend(o.files.iter().cloned());
        }

        let raw_dir = self.out.join("raw");
        fs::create_dir_all(&raw_dir)?;
        for task in tasks.iter().filter(|t| **t != Task::Tsne) {
            let path = raw_dir.join(format!("{}.csv", task.name()));
            let rows: Vec<Record> = outcome.records.iter().filter(|r| r.task == task.name()).cloned().collect();
            let mut buf = Vec::new();
            write_records(&rows, &mut buf)?;
            fs::write(&path, buf)?;
            outcome.files.push(path);
        }

        let manifest = Manifest {
            command,
            config_hash: sha256_hex(serde_json::to_string(&self.config)?.as_bytes()),
            config: &self.config,
            tasks: tasks.iter().map(|t| t.name()).collect(),
            datasets: prepared
                .iter()
                .map(|p| DatasetInfo {
                    name: &p.dataset.name,
                    hash: &p.dataset.hash,
                    n_nodes: p.dataset.graph.n_nodes(),
                    n_edges: p.dataset.graph.edges().len(),
                    n_labels: p.dataset.graph.n_labels(),
                    files: &p.dataset.files,
                })
                .collect(),
            jobs: entries,
            failures: &outcome.failures,
        };
        let manifest_path = self.out.join("manifest.json");
        fs::write(&manifest_path, serde_json::to_vec_pretty(&manifest)?)?;
        outcome.files.push(manifest_path);
        for f in &outcome.failures {
            warn!("{} {} run {:?} [{}]: {}", f.dataset, f.model, f.run, f.stage, f.message);
        }
        Ok(outcome)
    }

    fn embedding_for(&self, job: &JobSpec, ds: &Dataset) -> Result<(Embedding, PathBuf)> {
        let key = CacheKey {
            dataset: job.dataset.clone(),
            dataset_hash: ds.hash.clone(),
            model: job.model.name(),
            config_hash: job.model_config_hash.clone(),
            seed: job.seed,
            run: job.run,
        };
        let ids = ds.graph.node_ids();
        if let Some(e) = self.cache.get(&key, ids) {
            return Ok((e, self.cache.path(&key)));
        }
        info!("{} {} run {}: training", job.dataset, job.model, job.run);
        let spec = EmbedderSpec::resolve(job.model, &self.config.embedding);
        let e = spec.run(&ds.graph, job.seed, job.run)?;
        let path = self.cache.put(&key, ids, &e)?;
        Ok((e, path))
    }

    fn run_job(&self, job: &JobSpec, p: &Prepared, tasks: &[Task]) -> JobOutput {
        let mut out = JobOutput {
            records: Vec::new(),
            failures: Vec::new(),
            cache_file: None,
            files: Vec::new(),
        };
        let fail = |stage: &str, e: &Error| Failure {
            dataset: job.dataset.clone(),
            model: job.model.name(),
            run: Some(job.run),
            stage: stage.to_string(),
            message: e.to_string(),
        };
        let emb = match self.embedding_for(job, &p.dataset) {
            Ok((e, path)) => {
                out.cache_file = Some(path);
                e
            }
            Err(e) => {
                out.failures.push(fail("embed", &e));
                return out;
            }
        };
        let z = emb.matrix.view();
        for &task in tasks {
            let result = match task {
                Task::Topo => match &p.topo {
                    Ok(t) => self.topo_probes(job, z, t),
                    Err(_) => continue,
                },
                Task::Homogeneity => self.homogeneity(job, z, &p.dataset),
                Task::Cluster => self.clustering(job, z, &p.dataset),
                Task::Classify => self.classify(job, z, &p.dataset),
                Task::Tsne => match &p.topo {
                    Ok(t) if job.run == 0 => self.tsne(job, z, &p.dataset, t).map(|f| {
                        out.files.push(f);
                        Vec::new()
                    }),
                    _ => continue,
                },
            };
            match result {
                Ok(rs) => out.records.extend(rs),
                Err(e) => out.failures.push(fail(task.name(), &e)),
            }
        }
        out
    }

    fn record(&self, job: &JobSpec, task: Task, probe: &str, target: &str, metric: &str, value: f64) -> Record {
        Record {
            dataset: job.dataset.clone(),
            model: job.model.name(),
            run: job.run,
            task: task.name().to_string(),
            probe: probe.to_string(),
            target: target.to_string(),
            metric: metric.to_string(),
            value,
        }
    }

    fn probe_records(&self, job: &JobSpec, task: Task, target: &str, r: &ProbeResult) -> Vec<Record> {
        r.metrics
            .iter()
            .map(|m| self.record(job, task, r.kind.name(), target, &m.name, m.mean()))
            .collect()
    }

    /// Folds depend on (dataset, target, run) only, so every model is
    /// scored on identical splits.
    fn probe_spec(&self, job: &JobSpec, kind: ProbeKind, target: &str) -> ProbeSpec {
        ProbeSpec {
            kind,
            folds: self.config.probe.folds,
            seed: derive_seed(self.config.master_seed, &job.dataset, &format!("probe/{target}"), job.run),
        }
    }

    fn topo_probes(&self, job: &JobSpec, z: ArrayView2<f64>, topo: &TopoTable) -> Result<Vec<Record>> {
        let mut out = Vec::new();
        for &f in &self.config.probe.features {
            let target = f.short_name();
            if self.config.probe.regression {
                let values = topo.values(f);
                if values.iter().all(|&v| v == values[0]) {
                    warn!("{}: {target} is constant, skipping regression", job.dataset);
                } else {
                    let r = regression_probe(z, &values, &self.probe_spec(job, ProbeKind::LinearRegression, target))?;
                    out.extend(self.probe_records(job, Task::Topo, target, &r));
                }
            }
            let classes = topo.classes(f);
            if classes.iter().all(|&c| c == classes[0]) {
                if !self.config.probe.classifiers.is_empty() {
                    warn!("{}: {target} has a single class, skipping classifiers", job.dataset);
                }
                continue;
            }
            for &kind in &self.config.probe.classifiers {
                let r = classification_probe(z, classes, &self.probe_spec(job, kind, target))?;
                out.extend(self.probe_records(job, Task::Topo, target, &r));
            }
        }
        Ok(out)
    }

    fn homogeneity(&self, job: &JobSpec, z: ArrayView2<f64>, ds: &Dataset) -> Result<Vec<Record>> {
        let Some(labels) = ds.graph.labels() else {
            return Ok(Vec::new());
        };
        let m = internal_metrics(z, labels)?;
        Ok([("db", m.db), ("ch", m.ch), ("sc", m.sc)]
            .into_iter()
            .map(|(name, v)| self.record(job, Task::Homogeneity, "", "label", name, v))
            .collect())
    }

    fn clustering(&self, job: &JobSpec, z: ArrayView2<f64>, ds: &Dataset) -> Result<Vec<Record>> {
        let Some(labels) = ds.graph.labels() else {
            return Ok(Vec::new());
        };
        let k = ds.graph.n_labels();
        let mut out = Vec::new();
        let mut push = |probe: &str, pred: &[usize]| -> Result<()> {
            let m = external_metrics(pred, labels)?;
            for (name, v) in [("nmi", m.nmi), ("ari", m.ari), ("acc", m.acc)] {
                out.push(self.record(job, Task::Cluster, probe, "label", name, v));
            }
            Ok(())
        };
        let km = kmeans(z, k, sub_seed(job.seed, "kmeans"), self.config.cluster.kmeans_restarts)?;
        push("k-means", &km.assignments)?;
        if self.config.cluster.finch {
            let levels = finch(z)?;
            let level = nearest_level(&levels, k).ok_or_else(|| Error::InvalidArgument("FINCH produced no partition".into()))?;
            push("FINCH", &level.assignments)?;
        }
        Ok(out)
    }

    fn classify(&self, job: &JobSpec, z: ArrayView2<f64>, ds: &Dataset) -> Result<Vec<Record>> {
        let Some(labels) = ds.graph.labels() else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for &kind in &self.config.probe.classifiers {
            let r = classification_probe(z, labels, &self.probe_spec(job, kind, "label"))?;
            out.extend(self.probe_records(job, Task::Classify, "label", &r));
        }
        Ok(out)
    }

    /// `node_id,x,y,ground_truth,<feature>_class...` for run 0 of each model.
    fn tsne(&self, job: &JobSpec, z: ArrayView2<f64>, ds: &Dataset, topo: &TopoTable) -> Result<PathBuf> {
        let y = tsne_project(z, &self.config.tsne, sub_seed(job.seed, "tsne"))?;
        let dir = self.out.join("tsne").join(&job.dataset);
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{}.csv", job.model.name()));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "node_id", "x", "y", "ground_truth", "deg_class", "tri_class", "lc_class", "ec_class", "bc_class",
        ])?;
        let g = &ds.graph;
        for (v, id) in g.node_ids().iter().enumerate() {
            let truth = g.labels().map_or(String::new(), |l| g.label_names()[l[v]].clone());
            let mut rec = vec![id.clone(), y[[v, 0]].to_string(), y[[v, 1]].to_string(), truth];
            rec.extend(Feature::ALL.iter().map(|&f| topo.classes(f)[v].to_string()));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        fs::write(&path, bytes)?;
        Ok(path)
    }

    /// Aggregates every `raw/<task>.csv` present into `aggregated.csv` and
    /// the rendered tables under `reports/`.
    pub fn report(&self) -> Result<Outcome> {
        let mut records = Vec::new();
        for task in Task::ALL {
            let path = self.out.join("raw").join(format!("{}.csv", task.name()));
            if path.exists() {
                records.extend(read_records(fs::File::open(&path)?)?);
            }
        }
        if records.is_empty() {
            warn!("no raw records under {}", self.out.join("raw").display());
        }
        let selected: Vec<Record> = records
            .into_iter()
            .filter(|r| self.config.datasets.contains(&r.dataset) && self.config.models.iter().any(|m| m.name() == r.model))
            .collect();
        let table = aggregate_runs(&selected, self.config.runs);
        let mut outcome = Outcome::default();
        if !table.is_empty() {
            let path = self.out.join("aggregated.csv");
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            fs::write(&path, buf)?;
            outcome.files.push(path);
        }
        outcome.files.extend(emit_report(
            &table,
            &self.out.join("reports"),
            &[ReportFormat::Markdown, ReportFormat::Csv],
        )?);
        Ok(outcome)
    }

    /// Features, every enabled task, then the report.
    pub fn run_all(&self) -> Result<Outcome> {
        let prepared = self.prepare(true)?;
        let mut outcome = Outcome::default();
        self.write_topo(&prepared, &mut outcome)?;
        outcome.absorb(self.execute(&prepared, &self.config.tasks, "run-all")?);
        outcome.absorb(self.report()?);
        Ok(outcome)
    }
}

/// Runs the full grid of `config` and writes all outputs.
pub fn run_experiment(config: ExperimentConfig) -> Result<Outcome> {
    Pipeline::new(config)?.run_all()
}
