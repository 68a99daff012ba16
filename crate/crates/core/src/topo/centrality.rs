use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const DEFAULT_EC_TOL: f64 = 1e-10;
pub const DEFAULT_EC_MAX_ITER: usize = 10_000;

/// Eigenvector centrality over the undirected adjacency, unit Euclidean norm.
///
/// Iterates `x ← (A + I)x / ‖(A + I)x‖` from the uniform vector. The shift
/// leaves the dominant eigenvector unchanged but removes the ±λ oscillation
/// that plain `Ax` iteration has on bipartite graphs.
pub fn compute_eigenvector_centrality(graph: &Graph, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = graph.n_nodes();
    if n == 0 {
        return Err(Error::InvalidArgument("eigenvector centrality of an empty graph".into()));
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut next = vec![0.0; n];
    let mut delta = f64::INFINITY;
    for _ in 0..max_iter {
        for (v, out) in next.iter_mut().enumerate() {
            *out = x[v] + graph.neighbors(v).iter().map(|&u| x[u]).sum::<f64>();
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        next.iter_mut().for_each(|v| *v /= norm);
        delta = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        if delta < tol {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        delta,
    })
}

const BRANDES_CHUNK: usize = 64;

/// Unnormalized betweenness over unordered `{s, t}` pairs (Brandes), on the
/// undirected projection with unit edge lengths.
pub fn compute_betweenness(graph: &Graph) -> Vec<f64> {
    let n = graph.n_nodes();
    let sources: Vec<usize> = (0..n).collect();
    // fixed chunking + ordered reduction keeps the float sums reproducible
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(BRANDES_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            let mut ws = BrandesWorkspace::new(n);
            for &s in chunk {
                ws.accumulate_from(graph, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut bc = vec![0.0; n];
    for part in partials {
        for (b, p) in bc.iter_mut().zip(part) {
            *b += p;
        }
    }
    // every unordered pair was visited from both endpoints
    bc.iter_mut().for_each(|b| *b /= 2.0);
    bc
}

struct BrandesWorkspace {
    stack: Vec<usize>,
    queue: VecDeque<usize>,
    dist: Vec<i64>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    preds: Vec<Vec<usize>>,
}

impl BrandesWorkspace {
    fn new(n: usize) -> Self {
        Self {
            stack: Vec::with_capacity(n),
            queue: VecDeque::with_capacity(n),
            dist: vec![-1; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            preds: vec![Vec::new(); n],
        }
    }

    fn accumulate_from(&mut self, graph: &Graph, s: usize, acc: &mut [f64]) {
        for &v in &self.stack {
            self.dist[v] = -1;
            self.sigma[v] = 0.0;
            self.delta[v] = 0.0;
            self.preds[v].clear();
        }
        self.stack.clear();
        self.dist[s] = 0;
        self.sigma[s] = 1.0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.stack.push(v);
            for &w in graph.neighbors(v) {
                if self.dist[w] < 0 {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push(v);
                }
            }
        }
        for &w in self.stack.iter().rev() {
            let coeff = (1.0 + self.delta[w]) / self.sigma[w];
            for &v in &self.preds[w] {
                self.delta[v] += self.sigma[v] * coeff;
            }
            if w != s {
                acc[w] += self.delta[w];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;

    fn dense_adjacency(g: &Graph) -> DMatrix<f64> {
        let n = g.n_nodes();
        DMatrix::from_fn(n, n, |i, j| if g.has_edge_undirected(i, j) { 1.0 } else { 0.0 })
    }

    fn dominant_pair(g: &Graph) -> (f64, Vec<f64>) {
        let eig = SymmetricEigen::new(dense_adjacency(g));
        let top = eig.eigenvalues.imax();
        let mut v: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
        if v.iter().sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        (eig.eigenvalues[top], v)
    }

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    #[test]
    fn complete_graph_is_uniform() {
        let n = 6;
        let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let g = Graph::from_edges(n, &edges, false).unwrap();
        let ec = compute_eigenvector_centrality(&g, DEFAULT_EC_TOL, DEFAULT_EC_MAX_ITER).unwrap();
        for v in ec {
            assert!((v - 1.0 / (n as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn path_matches_dense_eigensolver() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)], false).unwrap();
        let ec = compute_eigenvector_centrality(&g, DEFAULT_EC_TOL, DEFAULT_EC_MAX_ITER).unwrap();
        let (_, oracle) = dominant_pair(&g);
        for (a, b) in ec.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((ec[0] - 0.5).abs() < 1e-9);
        assert!((ec[1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn disconnected_triangles_land_in_dominant_eigenspace() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)], false).unwrap();
        let ec = compute_eigenvector_centrality(&g, DEFAULT_EC_TOL, DEFAULT_EC_MAX_ITER).unwrap();
        let (lambda, _) = dominant_pair(&g);
        let a = dense_adjacency(&g);
        let x = nalgebra::DVector::from_vec(ec.clone());
        let residual = (&a * &x - lambda * &x).norm();
        assert!(residual < 1e-9, "residual {residual}");
        assert!((x.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_convergence_reports_iterations() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)], false).unwrap();
        match compute_eigenvector_centrality(&g, 1e-300, 5) {
            Err(Error::NonConvergence { iterations, .. }) => assert_eq!(iterations, 5),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn betweenness_examples() {
        let p3 = Graph::from_edges(3, &[(0, 1), (1, 2)], false).unwrap();
        assert_eq!(compute_betweenness(&p3), vec![0.0, 1.0, 0.0]);
        let k3 = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)], false).unwrap();
        assert_eq!(compute_betweenness(&k3), vec![0.0; 3]);
        let star = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)], false).unwrap();
        assert_eq!(compute_betweenness(&star)[0], brute_force_betweenness(&star)[0]);
        assert_eq!(compute_betweenness(&star)[0], 6.0);
    }

    /// BFS from every source; σ_st(v) = σ_sv·σ_vt whenever v lies on a
    /// shortest s–t path.
    pub(crate) fn brute_force_betweenness(g: &Graph) -> Vec<f64> {
        let n = g.n_nodes();
        let mut dist = vec![vec![usize::MAX; n]; n];
        let mut count = vec![vec![0f64; n]; n];
        for s in 0..n {
            dist[s][s] = 0;
            count[s][s] = 1.0;
            let mut frontier = vec![s];
            let mut d = 0;
            while !frontier.is_empty() {
                let mut next = Vec::new();
                for &v in &frontier {
                    for &w in g.neighbors(v) {
                        if dist[s][w] == usize::MAX {
                            dist[s][w] = d + 1;
                            next.push(w);
                        }
                        if dist[s][w] == d + 1 {
                            count[s][w] += count[s][v];
                        }
                    }
                }
                next.sort_unstable();
                next.dedup();
                frontier = next;
                d += 1;
            }
        }
        let mut bc = vec![0.0; n];
        for s in 0..n {
            for t in s + 1..n {
                if dist[s][t] == usize::MAX {
                    continue;
                }
                for v in 0..n {
                    if v == s || v == t || dist[s][v] == usize::MAX || dist[v][t] == usize::MAX {
                        continue;
                    }
                    if dist[s][v] + dist[v][t] == dist[s][t] {
                        bc[v] += count[s][v] * count[v][t] / count[s][t];
                    }
                }
            }
        }
        bc
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn betweenness_matches_brute_force(
            (n, edges) in (2usize..50).prop_flat_map(|n| (Just(n), proptest::collection::vec((0..n, 0..n), 0..n * 3)))
        ) {
            let g = Graph::from_edges(n, &edges, false).unwrap();
            let bc = compute_betweenness(&g);
            let oracle = brute_force_betweenness(&g);
            for v in 0..n {
                prop_assert!((bc[v] - oracle[v]).abs() < 1e-9, "node {}: {} vs {}", v, bc[v], oracle[v]);
                if g.degree(v) <= 1 {
                    prop_assert_eq!(bc[v], 0.0);
                }
            }
        }

        #[test]
        fn eigenvector_matches_dense_on_connected(
            (n, parents, extra) in (3usize..60).prop_flat_map(|n| (
                Just(n),
                proptest::collection::vec(any::<prop::sample::Index>(), n - 1),
                proptest::collection::vec((0..n, 0..n), n..n * 3),
            ))
        ) {
            // random recursive tree guarantees connectivity; near-path graphs
            // have a spectral gap too small for 10k power steps
            let mut edges: Vec<_> = parents.iter().enumerate().map(|(i, p)| (i + 1, p.index(i + 1))).collect();
            edges.extend(extra);
            let g = Graph::from_edges(n, &edges, false).unwrap();
            let ec = compute_eigenvector_centrality(&g, DEFAULT_EC_TOL, DEFAULT_EC_MAX_ITER).unwrap();
            let (_, oracle) = dominant_pair(&g);
            prop_assert!(cosine(&ec, &oracle) > 1.0 - 1e-8);
        }
    }
}
