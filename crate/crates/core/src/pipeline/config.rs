use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classic::SkipGramConfig;
use crate::error::{Error, Result};
use crate::eval::TsneConfig;
use crate::gae::Variant;
use crate::probe::ProbeKind;
use crate::topo::{Feature, TopoSettings};

/// Any embedder the pipeline can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelKind {
    Gae(Variant),
    LaplacianEigenmaps,
    Node2VecStructural,
    Node2VecHomophily,
}

impl ModelKind {
    pub fn all() -> Vec<ModelKind> {
        let mut v: Vec<ModelKind> = Variant::ALL.into_iter().map(ModelKind::Gae).collect();
        v.extend([ModelKind::LaplacianEigenmaps, ModelKind::Node2VecStructural, ModelKind::Node2VecHomophily]);
        v
    }

    pub fn name(self) -> String {
        match self {
            ModelKind::Gae(v) => v.model_name(),
            ModelKind::LaplacianEigenmaps => "LE".into(),
            ModelKind::Node2VecStructural => "Node2Vec-S".into(),
            ModelKind::Node2VecHomophily => "Node2Vec-H".into(),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim();
        match key.to_ascii_uppercase().as_str() {
            "LE" => return Ok(ModelKind::LaplacianEigenmaps),
            "NODE2VEC-S" => return Ok(ModelKind::Node2VecStructural),
            "NODE2VEC-H" => return Ok(ModelKind::Node2VecHomophily),
            _ => {}
        }
        key.parse::<Variant>()
            .map(ModelKind::Gae)
            .map_err(|_| Error::Config(format!("unknown model {s:?}")))
    }
}

impl TryFrom<String> for ModelKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModelKind> for String {
    fn from(m: ModelKind) -> String {
        m.name()
    }
}

/// Downstream stages run on every embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Regression and classification probes for the topological features.
    Topo,
    /// DB/CH/SC of the ground-truth label groups.
    Homogeneity,
    /// k-means and FINCH against ground truth.
    Cluster,
    /// Node classification on ground-truth labels.
    Classify,
    /// 2-D projection export; produces files, not records.
    Tsne,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Topo, Task::Homogeneity, Task::Cluster, Task::Classify, Task::Tsne];

    pub fn name(self) -> &'static str {
        match self {
            Task::Topo => "topo",
            Task::Homogeneity => "homogeneity",
            Task::Cluster => "cluster",
            Task::Classify => "classify",
            Task::Tsne => "tsne",
        }
    }

    pub fn from_name(s: &str) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSettings {
    pub folds: usize,
    pub features: Vec<Feature>,
    /// Run LN-R on the raw feature values.
    pub regression: bool,
    /// Classifiers used both on binned features and for node classification.
    pub classifiers: Vec<ProbeKind>,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            folds: 5,
            features: Feature::ALL.to_vec(),
            regression: true,
            classifiers: ProbeKind::CLASSIFIERS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSettings {
    pub kmeans_restarts: usize,
    pub finch: bool,
}

impl Default for ClusterSettings {
    fn default() -> Self {
        Self {
            kmeans_restarts: 10,
            finch: true,
        }
    }
}

/// Optional GAE overrides; unset fields keep the variant defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaeOverrides {
    pub lr: Option<f64>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub min_delta: Option<f64>,
    pub alpha: Option<f64>,
    pub proximity_k: Option<usize>,
    pub batch_norm: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedSettings {
    /// Embedding width for every model (CONCAT splits it over its layers).
    pub dim: usize,
    pub gae: GaeOverrides,
    pub walk_length: usize,
    pub num_walks: usize,
    pub skipgram: SkipGramConfig,
}

impl Default for EmbedSettings {
    fn default() -> Self {
        Self {
            dim: 64,
            gae: GaeOverrides::default(),
            walk_length: 80,
            num_walks: 10,
            skipgram: SkipGramConfig::default(),
        }
    }
}

fn default_runs() -> usize {
    10
}

fn default_registry() -> PathBuf {
    PathBuf::from("registry.toml")
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

fn default_tasks() -> Vec<Task> {
    vec![Task::Topo, Task::Homogeneity, Task::Cluster, Task::Classify]
}

/// One experiment grid. Relative paths resolve against the directory of the
/// config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<String>,
    pub models: Vec<ModelKind>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_registry")]
    pub registry: PathBuf,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 means one per core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub topo: TopoSettings,
    #[serde(default)]
    pub probe: ProbeSettings,
    #[serde(default)]
    pub cluster: ClusterSettings,
    #[serde(default)]
    pub tsne: TsneConfig,
    #[serde(default)]
    pub embedding: EmbedSettings,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.datasets.is_empty() {
            return bad("no datasets listed".into());
        }
        if self.models.is_empty() {
            return bad("no models listed".into());
        }
        if self.probe.folds < 2 {
            return bad(format!("probe.folds must be at least 2, got {}", self.probe.folds));
        }
        if self.probe.classifiers.contains(&ProbeKind::LinearRegression) {
            return bad("LN-R is a regression probe; enable it with probe.regression".into());
        }
        if self.embedding.dim == 0 || (self.models.contains(&ModelKind::Gae(Variant::Concat)) && self.embedding.dim < 2) {
            return bad("embedding.dim too small".into());
        }
        if self.topo.n_bins < 2 {
            return bad("topo.n_bins must be at least 2".into());
        }
        if self.cluster.kmeans_restarts == 0 {
            return bad("cluster.kmeans_restarts must be at least 1".into());
        }
        for (i, d) in self.datasets.iter().enumerate() {
            if self.datasets[..i].contains(d) {
                return bad(format!("dataset {d:?} listed twice"));
            }
        }
        for (i, m) in self.models.iter().enumerate() {
            if self.models[..i].contains(m) {
                return bad(format!("model {m} listed twice"));
            }
        }
        Ok(())
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn set_base_dir(&mut self, dir: impl Into<PathBuf>) {
        self.base_dir = dir.into();
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn registry_path(&self) -> PathBuf {
        self.resolve(&self.registry)
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn task_enabled(&self, task: Task) -> bool {
        self.tasks.contains(&task)
    }
}

/// On-disk location of one dataset. Paths are relative to the registry file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub edges: PathBuf,
    /// `<id> <f1> ... <fk> <label>` rows; also fixes the node set.
    #[serde(default)]
    pub attributes: Option<PathBuf>,
    /// `<id> <label>` rows, used when there is no attribute file.
    #[serde(default)]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub directed: bool,
    /// Expected SHA-256 per file, keyed by the path as written above.
    #[serde(default)]
    pub sha256: BTreeMap<String, String>,
}

impl DatasetEntry {
    pub fn files(&self) -> Vec<&Path> {
        let mut v = vec![self.edges.as_path()];
        v.extend(self.attributes.as_deref());
        v.extend(self.labels.as_deref());
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registry {
    pub datasets: BTreeMap<String, DatasetEntry>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Registry {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read dataset registry {}: {e}", path.display())))?;
        let mut reg: Registry =
            toml::from_str(&text).map_err(|e| Error::Config(format!("invalid registry {}: {e}", path.display())))?;
        reg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(reg)
    }

    pub fn entry(&self, name: &str) -> Result<&DatasetEntry> {
        self.datasets.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.datasets.keys().map(String::as_str).collect();
            Error::Config(format!("dataset {name:?} is not in the registry (known: {})", known.join(", ")))
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
