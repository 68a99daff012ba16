//! The five per-node topological features and their binned classes.

mod binning;
mod centrality;
mod local;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use binning::{bin_feature, BinStrategy, DEFAULT_BINS};
pub use centrality::{
    compute_betweenness, compute_eigenvector_centrality, DEFAULT_EC_MAX_ITER, DEFAULT_EC_TOL,
};
pub use local::{compute_local_stats, LocalStats};

use crate::error::Result;
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Feature {
    Degree,
    Triangles,
    #[serde(alias = "lc")]
    LocalClustering,
    #[serde(alias = "ec")]
    Eigenvector,
    #[serde(alias = "bc")]
    Betweenness,
}

impl Feature {
    pub const ALL: [Feature; 5] = [
        Feature::Degree,
        Feature::Triangles,
        Feature::LocalClustering,
        Feature::Eigenvector,
        Feature::Betweenness,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Feature::Degree => "degree",
            Feature::Triangles => "triangles",
            Feature::LocalClustering => "lc",
            Feature::Eigenvector => "ec",
            Feature::Betweenness => "bc",
        }
    }
}

/// Per-node feature values and their topological classes.
#[derive(Debug, Clone, PartialEq)]
pub struct TopoTable {
    pub degree: Vec<usize>,
    pub triangles: Vec<usize>,
    pub local_clustering: Vec<f64>,
    pub eigenvector: Vec<f64>,
    pub betweenness: Vec<f64>,
    pub n_bins: usize,
    classes: [Vec<usize>; 5],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopoSettings {
    pub n_bins: usize,
    pub strategy: BinStrategy,
    pub ec_tol: f64,
    pub ec_max_iter: usize,
}

impl Default for TopoSettings {
    fn default() -> Self {
        Self {
            n_bins: DEFAULT_BINS,
            strategy: BinStrategy::Quantile,
            ec_tol: DEFAULT_EC_TOL,
            ec_max_iter: DEFAULT_EC_MAX_ITER,
        }
    }
}

impl TopoTable {
    pub fn compute(graph: &Graph, settings: &TopoSettings) -> Result<Self> {
        let local = compute_local_stats(graph);
        let eigenvector =
            compute_eigenvector_centrality(graph, settings.ec_tol, settings.ec_max_iter)?;
        let betweenness = compute_betweenness(graph);
        let mut table = TopoTable {
            degree: local.degree,
            triangles: local.triangles,
            local_clustering: local.local_clustering,
            eigenvector,
            betweenness,
            n_bins: settings.n_bins,
            classes: Default::default(),
        };
        for (slot, feature) in Feature::ALL.into_iter().enumerate() {
            table.classes[slot] =
                bin_feature(&table.values(feature), settings.n_bins, settings.strategy)?;
        }
        Ok(table)
    }

    pub fn n_nodes(&self) -> usize {
        self.degree.len()
    }

    pub fn values(&self, feature: Feature) -> Vec<f64> {
        match feature {
            Feature::Degree => self.degree.iter().map(|&d| d as f64).collect(),
            Feature::Triangles => self.triangles.iter().map(|&t| t as f64).collect(),
            Feature::LocalClustering => self.local_clustering.clone(),
            Feature::Eigenvector => self.eigenvector.clone(),
            Feature::Betweenness => self.betweenness.clone(),
        }
    }

    pub fn classes(&self, feature: Feature) -> &[usize] {
        let slot = Feature::ALL.iter().position(|&f| f == feature).expect("listed feature");
        &self.classes[slot]
    }

    /// `node_id,degree,triangles,lc,ec,bc,deg_class,tri_class,lc_class,ec_class,bc_class`
    pub fn write_csv(&self, node_ids: &[String], out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "node_id", "degree", "triangles", "lc", "ec", "bc", "deg_class", "tri_class",
            "lc_class", "ec_class", "bc_class",
        ])?;
        for (v, id) in node_ids.iter().enumerate() {
            let mut rec = vec![
                id.clone(),
                self.degree[v].to_string(),
                self.triangles[v].to_string(),
                self.local_clustering[v].to_string(),
                self.eigenvector[v].to_string(),
                self.betweenness[v].to_string(),
            ];
            rec.extend(Feature::ALL.iter().map(|&f| self.classes(f)[v].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_csv_has_expected_schema() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 2)], false).unwrap();
        let t = TopoTable::compute(&g, &TopoSettings::default()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(g.node_ids(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "node_id,degree,triangles,lc,ec,bc,deg_class,tri_class,lc_class,ec_class,bc_class"
        );
        assert_eq!(lines.count(), 4);
        let norm: f64 = t.eigenvector.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(Feature::ALL.iter().all(|&f| t.classes(f).iter().all(|&c| c < t.n_bins)));
    }
}
