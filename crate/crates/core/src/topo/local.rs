use crate::graph::Graph;

/// Degree, triangle count, and local clustering per node.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalStats {
    pub degree: Vec<usize>,
    pub triangles: Vec<usize>,
    pub local_clustering: Vec<f64>,
}

fn count_common(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Degree and triangles use the undirected projection. Local clustering is
/// `2Δ/(K(K−1))` for undirected graphs; for directed graphs the numerator
/// counts arcs among neighbor pairs over the `K(K−1)` possible arcs.
/// Nodes with `K < 2` get 0.
pub fn compute_local_stats(graph: &Graph) -> LocalStats {
    let n = graph.n_nodes();
    let mut degree = Vec::with_capacity(n);
    let mut triangles = Vec::with_capacity(n);
    let mut local_clustering = Vec::with_capacity(n);
    for v in 0..n {
        let nbrs = graph.neighbors(v);
        let k = nbrs.len();
        let twice: usize = nbrs
            .iter()
            .map(|&u| count_common(nbrs, graph.neighbors(u)))
            .sum();
        let tri = twice / 2;
        let lc = if k < 2 {
            0.0
        } else if graph.is_directed() {
            let arcs = nbrs
                .iter()
                .flat_map(|&u| nbrs.iter().map(move |&w| (u, w)))
                .filter(|&(u, w)| u != w && graph.has_arc(u, w))
                .count();
            arcs as f64 / (k * (k - 1)) as f64
        } else {
            2.0 * tri as f64 / (k * (k - 1)) as f64
        };
        degree.push(k);
        triangles.push(tri);
        local_clustering.push(lc);
    }
    LocalStats {
        degree,
        triangles,
        local_clustering,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn complete(n: usize) -> Graph {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Graph::from_edges(n, &edges, false).unwrap()
    }

    #[test]
    fn complete_graph_examples() {
        let s = compute_local_stats(&complete(3));
        assert_eq!(s.degree, vec![2; 3]);
        assert_eq!(s.triangles, vec![1; 3]);
        assert_eq!(s.local_clustering, vec![1.0; 3]);
        let s = compute_local_stats(&complete(4));
        assert_eq!(s.triangles, vec![3; 4]);
        assert_eq!(s.local_clustering, vec![1.0; 4]);
    }

    #[test]
    fn star_center_has_no_triangles() {
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)], false).unwrap();
        let s = compute_local_stats(&g);
        assert_eq!((s.degree[0], s.triangles[0], s.local_clustering[0]), (4, 0, 0.0));
        assert_eq!(s.local_clustering[1], 0.0);
    }

    #[test]
    fn directed_clustering_counts_arcs() {
        // 0 -> 1, 0 -> 2, 1 -> 2: node 0 has neighbors {1, 2} with one arc of two possible
        let g = Graph::from_edges(3, &[(0, 1), (0, 2), (1, 2)], true).unwrap();
        let s = compute_local_stats(&g);
        assert_eq!(s.triangles, vec![1; 3]);
        assert_eq!(s.local_clustering[0], 0.5);
        let g = Graph::from_edges(3, &[(0, 1), (0, 2), (1, 2), (2, 1)], true).unwrap();
        assert_eq!(compute_local_stats(&g).local_clustering[0], 1.0);
    }

    fn brute_force_triangles(g: &Graph) -> Vec<usize> {
        let n = g.n_nodes();
        let mut t = vec![0; n];
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    if g.has_edge_undirected(a, b)
                        && g.has_edge_undirected(b, c)
                        && g.has_edge_undirected(a, c)
                    {
                        t[a] += 1;
                        t[b] += 1;
                        t[c] += 1;
                    }
                }
            }
        }
        t
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn triangles_match_triple_enumeration(
            (n, edges) in (3usize..100).prop_flat_map(|n| (Just(n), proptest::collection::vec((0..n, 0..n), 0..n * 4)))
        ) {
            let g = Graph::from_edges(n, &edges, false).unwrap();
            let s = compute_local_stats(&g);
            prop_assert_eq!(s.triangles, brute_force_triangles(&g));
            prop_assert!(s.local_clustering.iter().all(|&c| (0.0..=1.0).contains(&c)));
        }
    }
}
