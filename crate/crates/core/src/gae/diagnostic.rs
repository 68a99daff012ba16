use serde::{Deserialize, Serialize};

use super::{Aggregation, GaeModel};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::numkit::Matrix;
use crate::stats::spearman;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumRuleDiagnostic {
    pub norm_degree_spearman: f64,
    /// Within-label over global mean pairwise distance of message weights;
    /// `None` without labels.
    pub within_label_weight_dispersion: Option<f64>,
}

/// Spearman correlation between the row norms of the first-layer
/// pre-activation `operator·X·W₁` and node degree. Defined for every
/// variant; 0 when degrees are all equal.
pub fn first_layer_norm_degree_spearman(model: &GaeModel, graph: &Graph) -> Result<f64> {
    if graph.n_nodes() != model.n_nodes() {
        return Err(Error::Shape(format!(
            "model has {} nodes, graph has {}",
            model.n_nodes(),
            graph.n_nodes()
        )));
    }
    let pre = model.forward()?.pre1;
    let norms: Vec<f64> = pre.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    let degrees: Vec<f64> = (0..graph.n_nodes()).map(|v| graph.degree(v) as f64).collect();
    Ok(spearman(&norms, &degrees))
}

/// Measures how closely a SUM-family first layer behaves like
/// `h₁(v) ≈ |N(v)|·w̄`: the norm/degree rank correlation, and when labels are
/// present, how tightly the message weights of each label's neighbourhoods
/// cluster compared to all message weights.
pub fn sum_rule_diagnostic(model: &GaeModel, graph: &Graph) -> Result<SumRuleDiagnostic> {
    if model.config().variant.aggregation() != Aggregation::Sum {
        return Err(Error::Unsupported(format!(
            "sum-rule diagnostic needs a SUM-family model, got {}",
            model.config().variant.model_name()
        )));
    }
    let norm_degree_spearman = first_layer_norm_degree_spearman(model, graph)?;
    let within_label_weight_dispersion = match graph.labels() {
        Some(labels) => Some(label_dispersion(&model.message_weights()?, graph, labels)),
        None => None,
    };
    Ok(SumRuleDiagnostic {
        norm_degree_spearman,
        within_label_weight_dispersion,
    })
}

fn mean_pairwise_distance(w: &Matrix, members: &[usize]) -> (f64, usize) {
    let mut total = 0.0;
    let mut pairs = 0;
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            let d = &w.row(a) - &w.row(b);
            total += d.dot(&d).sqrt();
            pairs += 1;
        }
    }
    (total, pairs)
}

/// For each label, the node set is the union of closed neighbourhoods of the
/// nodes carrying it; within-group distances are pooled over all groups.
fn label_dispersion(w: &Matrix, graph: &Graph, labels: &[usize]) -> f64 {
    let n = graph.n_nodes();
    let n_labels = labels.iter().max().map_or(0, |m| m + 1);
    let mut within = (0.0, 0usize);
    for c in 0..n_labels {
        let mut member = vec![false; n];
        for v in (0..n).filter(|&v| labels[v] == c) {
            member[v] = true;
            for &u in graph.neighbors(v) {
                member[u] = true;
            }
        }
        let idx: Vec<usize> = (0..n).filter(|&v| member[v]).collect();
        let (t, p) = mean_pairwise_distance(w, &idx);
        within.0 += t;
        within.1 += p;
    }
    let all: Vec<usize> = (0..n).collect();
    let (gt, gp) = mean_pairwise_distance(w, &all);
    if within.1 == 0 || gt == 0.0 {
        return f64::NAN;
    }
    (within.0 / within.1 as f64) / (gt / gp as f64)
}
