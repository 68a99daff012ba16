use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

use crate::embedding::{Embedding, EmbeddingTag};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Laplacian Eigenmaps on `L = I − D^{-1/2} A D^{-1/2}`.
///
/// The global null vector `D^{1/2}·1` is removed by deflation, so on a
/// disconnected graph the remaining per-component null vectors survive as
/// near-zero-eigenvalue columns. Isolated nodes contribute an eigenvalue 1.
pub fn laplacian_eigenmaps(graph: &Graph, d: usize) -> Result<Embedding> {
    let n = graph.n_nodes();
    if n <= d {
        return Err(Error::InvalidArgument(format!(
            "Laplacian Eigenmaps needs more nodes than dimensions (n={n}, d={d})"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
    }
    let deg: Vec<f64> = (0..n).map(|v| graph.degree(v) as f64).collect();
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|&k| if k > 0.0 { 1.0 / k.sqrt() } else { 0.0 })
        .collect();

    let mut lap = DMatrix::<f64>::identity(n, n);
    for v in 0..n {
        for &u in graph.neighbors(v) {
            lap[(v, u)] -= inv_sqrt[v] * inv_sqrt[u];
        }
    }
    // deflate the global null vector past the top of the spectrum (λ ≤ 2)
    let norm = deg.iter().sum::<f64>().sqrt();
    if norm > 0.0 {
        let u0: Vec<f64> = deg.iter().map(|k| k.sqrt() / norm).collect();
        for i in 0..n {
            for j in 0..n {
                lap[(i, j)] += 3.0 * u0[i] * u0[j];
            }
        }
    }

    let eig = SymmetricEigen::new(lap);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let mut out = Array2::zeros((n, d));
    for (c, &k) in order.iter().take(d).enumerate() {
        let col = eig.eigenvectors.column(k);
        // canonical sign: largest-magnitude entry positive
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            out[[r, c]] = sign * col[r];
        }
    }
    Embedding::new(
        out,
        EmbeddingTag::new("LE", 0, 0, serde_json::json!({ "dim": d })),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_laplacian(g: &Graph) -> DMatrix<f64> {
        let n = g.n_nodes();
        DMatrix::from_fn(n, n, |i, j| {
            let (di, dj) = (g.degree(i) as f64, g.degree(j) as f64);
            let a = if g.has_edge_undirected(i, j) { 1.0 } else { 0.0 };
            let id = if i == j { 1.0 } else { 0.0 };
            if di == 0.0 || dj == 0.0 {
                id
            } else {
                id - a / (di * dj).sqrt()
            }
        })
    }

    #[test]
    fn two_components_split_by_sign() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)], false).unwrap();
        let y = laplacian_eigenmaps(&g, 1).unwrap().matrix;
        assert!(y[[0, 0]] * y[[1, 0]] > 0.0);
        assert!(y[[2, 0]] * y[[3, 0]] > 0.0);
        assert!(y[[0, 0]] * y[[2, 0]] < 0.0);
        // it is a null vector of the undeflated Laplacian
        let l = dense_laplacian(&g);
        let v = nalgebra::DVector::from_iterator(4, y.column(0).iter().copied());
        assert!((l * v).norm() < 1e-12);
    }

    #[test]
    fn ring_rows_have_equal_norm() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], false).unwrap();
        let y = laplacian_eigenmaps(&g, 2).unwrap().matrix;
        let norms: Vec<f64> = y.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
        for w in norms.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-10, "{norms:?}");
        }
    }

    #[test]
    fn columns_orthonormal_and_eigen() {
        let edges = [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3), (1, 6), (6, 7)];
        let g = Graph::from_edges(8, &edges, false).unwrap();
        let y = laplacian_eigenmaps(&g, 4).unwrap().matrix;
        let gram = y.t().dot(&y);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - want).abs() < 1e-8);
            }
        }
        // matches the 2nd..5th eigenvalues of the dense oracle
        let l = dense_laplacian(&g);
        let mut evals: Vec<f64> = SymmetricEigen::new(l.clone()).eigenvalues.iter().copied().collect();
        evals.sort_by(f64::total_cmp);
        for c in 0..4 {
            let v = nalgebra::DVector::from_iterator(8, y.column(c).iter().copied());
            let rq = v.dot(&(&l * &v));
            assert!((rq - evals[c + 1]).abs() < 1e-9);
        }
    }

    #[test]
    fn too_few_nodes() {
        let g = Graph::from_edges(3, &[(0, 1)], false).unwrap();
        assert!(laplacian_eigenmaps(&g, 3).is_err());
    }
}
