//! Synthetic on-disk datasets for pipeline tests.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Planted partition with `blocks` communities of `size` nodes. Each node
/// carries 12 binary attributes, four of which are tied to its community.
pub fn write_planted(dir: &Path, name: &str, blocks: usize, size: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = blocks * size;
    let mut edges = String::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if u / size == v / size { 0.35 } else { 0.02 };
            if rng.random::<f64>() < p {
                writeln!(edges, "n{u}\tn{v}").unwrap();
            }
        }
    }
    let mut content = String::new();
    for u in 0..n {
        write!(content, "n{u}").unwrap();
        for j in 0..12 {
            let on = if j / 4 == (u / size) % 3 { 0.7 } else { 0.1 };
            write!(content, "\t{}", u8::from(rng.random::<f64>() < on)).unwrap();
        }
        writeln!(content, "\tclass{}", u / size).unwrap();
    }
    std::fs::create_dir_all(dir.join(name)).unwrap();
    std::fs::write(dir.join(name).join(format!("{name}.cites")), edges).unwrap();
    std::fs::write(dir.join(name).join(format!("{name}.content")), content).unwrap();
}

pub fn registry_entry(name: &str) -> String {
    format!("[datasets.{name}]\nedges = \"{name}/{name}.cites\"\nattributes = \"{name}/{name}.content\"\n")
}

/// A small, fast grid over the dataset `name`; `extra` is appended verbatim.
pub fn small_config(dir: &Path, datasets: &[&str], models: &[&str], runs: usize, extra: &str) -> PathBuf {
    let list = |xs: &[&str]| xs.iter().map(|x| format!("\"{x}\"")).collect::<Vec<_>>().join(", ");
    let text = format!(
        r#"datasets = [{}]
models = [{}]
runs = {runs}
master_seed = 11
output_dir = "out"
workers = 2
tasks = ["topo", "homogeneity", "cluster", "classify", "tsne"]

[topo]
n_bins = 4

[probe]
folds = 3
classifiers = ["LG-R", "SVM-L"]

[cluster]
kmeans_restarts = 3

[tsne]
perplexity = 5.0
iterations = 300
exaggeration_iters = 100

[embedding]
dim = 8
walk_length = 12
num_walks = 3

[embedding.gae]
max_epochs = 40
patience = 5

[embedding.skipgram]
epochs = 1
window = 4
{extra}
"#,
        list(datasets),
        list(models)
    );
    let path = dir.join("experiment.toml");
    std::fs::write(&path, text).unwrap();
    path
}
