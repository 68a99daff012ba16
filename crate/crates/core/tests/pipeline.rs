mod common;

use std::fs;
use std::path::Path;

use topoprobe::pipeline::{
    enumerate_jobs, read_records, CellStatus, ExperimentConfig, Pipeline, Task, aggregate_runs,
};
use topoprobe::Error;

fn setup(dir: &Path, models: &[&str], runs: usize, extra: &str) -> ExperimentConfig {
    common::write_planted(dir, "toy", 3, 15, 5);
    fs::write(dir.join("registry.toml"), common::registry_entry("toy")).unwrap();
    ExperimentConfig::load(&common::small_config(dir, &["toy"], models, runs, extra)).unwrap()
}

fn raw_bytes(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(out.join("raw"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn full_grid_is_reproducible_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), &["GAE_FIRST", "GAE_MEAN", "LE", "Node2Vec-S"], 2, "");
    let out = cfg.output_path();

    let first = Pipeline::new(cfg.clone()).unwrap().run_all().unwrap();
    assert!(first.is_complete(), "{:?}", first.failures);
    let raw1 = raw_bytes(&out);
    assert_eq!(raw1.len(), 4);
    for (_, bytes) in &raw1 {
        assert!(bytes.len() > 60);
    }
    for f in ["topo/toy.csv", "aggregated.csv", "manifest.json", "reports/topo_toy.md", "reports/cluster_toy.csv", "tsne/toy/LE.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let tsne = fs::read_to_string(out.join("tsne/toy/GAE_FIRST.csv")).unwrap();
    assert!(tsne.starts_with("node_id,x,y,ground_truth,deg_class,tri_class,lc_class,ec_class,bc_class\n"));
    assert_eq!(tsne.lines().count(), 46);

    // a second run reads every embedding from the cache and reproduces the bytes
    let cache_dir = out.join("cache/embeddings");
    let stamp = |p: &Path| fs::metadata(p).unwrap().modified().unwrap();
    let le = fs::read_dir(cache_dir.join("toy/LE")).unwrap().next().unwrap().unwrap().path();
    let before = stamp(&le);
    Pipeline::new(cfg.clone()).unwrap().run_all().unwrap();
    assert_eq!(stamp(&le), before);
    assert_eq!(raw_bytes(&out), raw1);

    // and a cold cache recomputes the same bytes
    fs::remove_dir_all(&cache_dir).unwrap();
    Pipeline::new(cfg).unwrap().run_all().unwrap();
    assert_eq!(raw_bytes(&out), raw1);
}

#[test]
fn manifest_lists_every_job_with_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), &["GAE_L2_SUM", "LE"], 3, "");
    let pipeline = Pipeline::new(cfg.clone()).unwrap();
    pipeline.embed().unwrap();
    let m: serde_json::Value = serde_json::from_slice(&fs::read(cfg.output_path().join("manifest.json")).unwrap()).unwrap();
    let jobs = m["jobs"].as_array().unwrap();
    assert_eq!(jobs.len(), 6);
    let expected = enumerate_jobs(&cfg);
    for (j, e) in jobs.iter().zip(&expected) {
        assert_eq!(j["seed"].as_u64().unwrap(), e.seed);
        assert_eq!(j["model_config_hash"].as_str().unwrap(), e.model_config_hash);
        assert_eq!(j["status"], "ok");
        let cached = cfg.output_path().join(j["cache_file"].as_str().unwrap());
        assert!(cached.exists() && cached.with_extension("json").exists());
    }
    assert_eq!(m["datasets"][0]["n_nodes"], 45);
    assert_eq!(m["datasets"][0]["hash"].as_str().unwrap().len(), 64);
}

#[test]
fn ten_model_grid_enumerates_1100_jobs() {
    let names: Vec<String> = (0..11).map(|i| format!("\"d{i}\"")).collect();
    let text = format!(
        "datasets = [{}]\nmodels = [\"L1_SUM\", \"L2_SUM\", \"CONCAT\", \"FIRST\", \"MEAN\", \"MIXED\", \"SPECTRAL\", \"LE\", \"Node2Vec-S\", \"Node2Vec-H\"]\n",
        names.join(", ")
    );
    let cfg = ExperimentConfig::from_toml(&text, Path::new("")).unwrap();
    let jobs = enumerate_jobs(&cfg);
    assert_eq!(jobs.len(), 1100);
    let mut seeds: Vec<u64> = jobs.iter().map(|j| j.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), 1100);
}

#[test]
fn two_runs_one_regression_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), &["GAE_FIRST"], 2, "");
    let text = fs::read_to_string(dir.path().join("experiment.toml"))
        .unwrap()
        .replace("classifiers = [\"LG-R\", \"SVM-L\"]", "classifiers = []\nfeatures = [\"degree\"]")
        .replace("tasks = [\"topo\", \"homogeneity\", \"cluster\", \"classify\", \"tsne\"]", "tasks = [\"topo\"]");
    let cfg = ExperimentConfig::from_toml(&text, cfg.base_dir()).unwrap();
    let outcome = Pipeline::new(cfg.clone()).unwrap().run_all().unwrap();
    assert!(outcome.is_complete());
    let caches = fs::read_dir(cfg.output_path().join("cache/embeddings/toy/GAE_FIRST"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().unwrap() == "csv")
        .count();
    assert_eq!(caches, 2);
    let records = read_records(fs::File::open(cfg.output_path().join("raw/topo.csv")).unwrap()).unwrap();
    let table = aggregate_runs(&records, cfg.runs);
    let mse: Vec<_> = table.cells.iter().filter(|c| c.metric == "mse").collect();
    assert_eq!(mse.len(), 1);
    assert_eq!(mse[0].status(), CellStatus::Complete);
    assert_eq!(mse[0].values.len(), 2);
}

#[test]
fn failing_model_is_recorded_and_grid_continues() {
    let dir = tempfile::tempdir().unwrap();
    // 50-dimensional eigenmaps need more than 45 nodes; the GAE cell still runs
    let cfg = setup(dir.path(), &["LE", "GAE_FIRST"], 1, "");
    let text = fs::read_to_string(dir.path().join("experiment.toml")).unwrap().replace("dim = 8", "dim = 50");
    let cfg = ExperimentConfig::from_toml(&text, cfg.base_dir()).unwrap();
    let outcome = Pipeline::new(cfg.clone()).unwrap().run_tasks(&[Task::Classify], "classify").unwrap();
    assert!(!outcome.is_complete());
    assert!(outcome.failures.iter().all(|f| f.model == "LE" && f.stage == "embed"));
    assert!(outcome.records.iter().any(|r| r.model == "GAE_FIRST"));
    assert!(outcome.records.iter().all(|r| r.model != "LE"));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(cfg.output_path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["failures"].as_array().unwrap().len(), 1);
    assert_eq!(m["jobs"][0]["status"], "failed");
    assert_eq!(m["jobs"][1]["status"], "ok");
}

#[test]
fn missing_dataset_names_expected_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("registry.toml"), common::registry_entry("cora")).unwrap();
    let cfg = ExperimentConfig::load(&common::small_config(dir.path(), &["cora"], &["LE"], 1, "")).unwrap();
    let pipeline = Pipeline::new(cfg).unwrap();
    match pipeline.run_all() {
        Err(Error::MissingDataset { dataset, path }) => {
            assert_eq!(dataset, "cora");
            assert!(path.ends_with("cora/cora.cites"));
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(pipeline.fetch(), Err(Error::MissingDataset { .. })));
}

#[test]
fn unknown_dataset_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), &["LE"], 1, "");
    let text = fs::read_to_string(dir.path().join("experiment.toml")).unwrap().replace("[\"toy\"]", "[\"pubmed\"]");
    let cfg = ExperimentConfig::from_toml(&text, cfg.base_dir()).unwrap();
    assert!(matches!(Pipeline::new(cfg), Err(Error::Config(_))));
}
