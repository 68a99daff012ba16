//! Graph ingestion and the sparse operands every embedder consumes.

mod io;
mod sparse;

use std::collections::{BTreeSet, HashMap};

pub use io::{load_attributes, load_edge_list, load_labels, EdgeListOptions};
pub use sparse::SparseMatrix;

use crate::error::{Error, Result};

/// Immutable node/edge structure with optional attributes and labels.
///
/// Nodes are densely reindexed `0..n_nodes`; `node_ids[i]` is the external
/// token for node `i`. Undirected graphs store each edge once as
/// `(min, max)`. Self-loops never survive ingestion.
#[derive(Debug, Clone)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    directed: bool,
    attributes: Option<SparseMatrix>,
    labels: Option<Vec<usize>>,
    label_names: Vec<String>,
    node_ids: Vec<String>,
    node_index: HashMap<String, usize>,
    // undirected projection, sorted
    neighbors: Vec<Vec<usize>>,
    // directed out-lists, sorted; empty when undirected
    successors: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `D̂⁻¹Â`
    Mean,
    /// `D̂^(−1/2) Â D̂^(−1/2)`
    Spectral,
}

impl Graph {
    /// Builds a graph over nodes `0..n_nodes` whose external ids are the
    /// decimal indices.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)], directed: bool) -> Result<Self> {
        let node_ids = (0..n_nodes).map(|i| i.to_string()).collect();
        Self::with_node_ids(node_ids, edges.iter().copied(), directed)
    }

    pub(crate) fn with_node_ids(
        node_ids: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        directed: bool,
    ) -> Result<Self> {
        let n_nodes = node_ids.len();
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) references a node outside 0..{n_nodes}"
                )));
            }
            if u == v {
                continue;
            }
            set.insert(if directed { (u, v) } else { (u.min(v), u.max(v)) });
        }
        let edges: Vec<(usize, usize)> = set.into_iter().collect();

        let mut neighbors = vec![BTreeSet::new(); n_nodes];
        let mut successors = vec![Vec::new(); if directed { n_nodes } else { 0 }];
        for &(u, v) in &edges {
            neighbors[u].insert(v);
            neighbors[v].insert(u);
            if directed {
                successors[u].push(v);
            }
        }
        let neighbors = neighbors
            .into_iter()
            .map(|s| s.into_iter().collect())
            .collect();
        let node_index = node_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect::<HashMap<_, _>>();
        if node_index.len() != n_nodes {
            return Err(Error::InvalidArgument("duplicate node ids".into()));
        }
        Ok(Self {
            n_nodes,
            edges,
            directed,
            attributes: None,
            labels: None,
            label_names: Vec::new(),
            node_ids,
            node_index,
            neighbors,
            successors,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    /// Neighbors in the undirected projection, sorted ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn has_edge_undirected(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    /// Directed arc test; for undirected graphs this is adjacency.
    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        if self.directed {
            self.successors[u].binary_search(&v).is_ok()
        } else {
            self.has_edge_undirected(u, v)
        }
    }

    pub fn attributes(&self) -> Option<&SparseMatrix> {
        self.attributes.as_ref()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn n_labels(&self) -> usize {
        self.label_names.len()
    }

    pub fn with_attributes(mut self, attributes: SparseMatrix) -> Result<Self> {
        if attributes.rows() != self.n_nodes {
            return Err(Error::Shape(format!(
                "attribute matrix has {} rows for {} nodes",
                attributes.rows(),
                self.n_nodes
            )));
        }
        self.attributes = Some(attributes);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<usize>, label_names: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_nodes {
            return Err(Error::Shape(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.n_nodes
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= label_names.len()) {
            return Err(Error::InvalidArgument(format!("label id {bad} has no name")));
        }
        self.labels = Some(labels);
        self.label_names = label_names;
        Ok(self)
    }

    /// Binary symmetric adjacency without self-loops.
    pub fn adjacency(&self) -> SparseMatrix {
        let triplets = self
            .edges
            .iter()
            .flat_map(|&(u, v)| [(u, v, 1.0), (v, u, 1.0)]);
        SparseMatrix::from_triplets(self.n_nodes, self.n_nodes, triplets)
            .expect("edge endpoints validated at construction")
            .binarize()
    }

    /// `Â = A + I` over the undirected projection.
    pub fn augmented_adjacency(&self) -> SparseMatrix {
        let triplets = self
            .edges
            .iter()
            .flat_map(|&(u, v)| [(u, v, 1.0), (v, u, 1.0)])
            .chain((0..self.n_nodes).map(|i| (i, i, 1.0)));
        SparseMatrix::from_triplets(self.n_nodes, self.n_nodes, triplets)
            .expect("edge endpoints validated at construction")
            .binarize()
    }

    /// Binary pattern of `A^k`: entry 1 iff some walk of length exactly `k`
    /// joins the pair.
    pub fn proximity_power(&self, k: usize) -> Result<SparseMatrix> {
        if k == 0 {
            return Err(Error::InvalidArgument("proximity power k must be >= 1".into()));
        }
        let a = self.adjacency();
        let mut reach = a.clone();
        for _ in 1..k {
            reach = reach.matmul_sparse(&a)?.binarize();
        }
        Ok(reach)
    }

    /// `n × n` identity used as `H₀` when the graph has no attributes.
    pub fn one_hot_features(&self) -> Result<SparseMatrix> {
        if self.attributes.is_some() {
            return Err(Error::InvalidArgument(
                "graph carries attributes; use them as H0 instead of one-hot".into(),
            ));
        }
        Ok(SparseMatrix::identity(self.n_nodes))
    }

    /// Attributes when present, otherwise the one-hot identity.
    pub fn input_features(&self) -> SparseMatrix {
        match &self.attributes {
            Some(x) => x.clone(),
            None => SparseMatrix::identity(self.n_nodes),
        }
    }
}

/// Mean or spectral normalization of an augmented adjacency, using its row
/// sums as `D̂`.
pub fn normalize_adjacency(ahat: &SparseMatrix, mode: Normalization) -> Result<SparseMatrix> {
    let (rows, cols) = ahat.dims();
    if rows != cols {
        return Err(Error::Shape(format!("operator must be square, got {rows}x{cols}")));
    }
    let sums = ahat.row_sums();
    if let Some(r) = sums.iter().position(|&s| s <= 0.0) {
        return Err(Error::InvalidArgument(format!("row {r} has non-positive sum")));
    }
    let ones = vec![1.0; rows];
    Ok(match mode {
        Normalization::Mean => {
            let inv: Vec<f64> = sums.iter().map(|s| 1.0 / s).collect();
            ahat.scale(&inv, &ones)
        }
        Normalization::Spectral => {
            let inv_sqrt: Vec<f64> = sums.iter().map(|s| 1.0 / s.sqrt()).collect();
            ahat.scale(&inv_sqrt, &inv_sqrt)
        }
    })
}
