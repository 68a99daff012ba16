use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use log::warn;

use super::{Graph, SparseMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct EdgeListOptions {
    pub directed: bool,
    /// When set, the node set is exactly these ids (in this order) and
    /// edges touching any other id are skipped.
    pub restrict_to: Option<Vec<String>>,
}

fn data_lines(source: impl BufRead) -> impl Iterator<Item = Result<(usize, String)>> {
    source
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(Error::from(e))),
            Ok(line) => {
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    None
                } else {
                    Some(Ok((i + 1, trimmed.to_string())))
                }
            }
        })
}

fn tokens(line: &str) -> Vec<&str> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .collect()
}

/// Reads a whitespace- (or comma-) separated edge list. Tokens after the
/// second on each line (weights, timestamps) are ignored.
pub fn load_edge_list(source: impl BufRead, options: &EdgeListOptions) -> Result<Graph> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    if let Some(known) = &options.restrict_to {
        for id in known {
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(Error::InvalidArgument(format!("node id {id} listed twice")));
            }
            ids.push(id.clone());
        }
    }
    let restricted = options.restrict_to.is_some();
    let mut edges = Vec::new();
    let mut skipped = 0usize;
    for item in data_lines(source) {
        let (line_no, line) = item?;
        let toks = tokens(&line);
        if toks.len() < 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected two node tokens, found '{line}'"),
            });
        }
        let mut endpoint = |tok: &str| -> Option<usize> {
            if let Some(&i) = index.get(tok) {
                return Some(i);
            }
            if restricted {
                return None;
            }
            let i = ids.len();
            ids.push(tok.to_string());
            index.insert(tok.to_string(), i);
            Some(i)
        };
        match (endpoint(toks[0]), endpoint(toks[1])) {
            (Some(u), Some(v)) => edges.push((u, v)),
            _ => skipped += 1,
        }
    }
    if edges.is_empty() {
        return Err(Error::EmptyInput);
    }
    if skipped > 0 {
        warn!("skipped {skipped} edges whose endpoints are outside the restricted node set");
    }
    Graph::with_node_ids(ids, edges, options.directed)
}

/// Reads a Planetoid-style `.content` file: `<node-id> <f1> ... <fk> <label>`.
///
/// Every graph node must appear exactly once. Label tokens are mapped to
/// ids in sorted token order.
pub fn load_attributes(source: impl BufRead, graph: Graph) -> Result<Graph> {
    let n = graph.n_nodes();
    let mut width: Option<usize> = None;
    let mut seen = vec![false; n];
    let mut triplets = Vec::new();
    let mut raw_labels: Vec<Option<String>> = vec![None; n];
    for item in data_lines(source) {
        let (line_no, line) = item?;
        let toks = tokens(&line);
        if toks.len() < 3 {
            return Err(Error::Parse {
                line: line_no,
                message: "expected node id, at least one attribute, and a label".into(),
            });
        }
        let k = toks.len() - 2;
        match width {
            None => width = Some(k),
            Some(w) if w != k => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("row has {k} attributes, expected {w}"),
                })
            }
            _ => {}
        }
        let node = graph.index_of(toks[0]).ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("unknown node id '{}'", toks[0]),
        })?;
        if std::mem::replace(&mut seen[node], true) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("node '{}' listed twice", toks[0]),
            });
        }
        for (col, tok) in toks[1..=k].iter().enumerate() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("attribute '{tok}' is not numeric"),
            })?;
            if v != 0.0 {
                triplets.push((node, col, v));
            }
        }
        raw_labels[node] = Some(toks[k + 1].to_string());
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidArgument(format!(
            "attribute file has no row for node '{}'",
            graph.node_ids()[missing]
        )));
    }
    let width = width.unwrap_or(0);
    let attributes = SparseMatrix::from_triplets(n, width, triplets)?;
    let (labels, names) = encode_labels(raw_labels);
    graph.with_attributes(attributes)?.with_labels(labels, names)
}

/// Reads `<node-id> <label>` lines. A first data line whose node token is
/// not a graph node is treated as a header.
pub fn load_labels(source: impl BufRead, graph: Graph) -> Result<Graph> {
    let n = graph.n_nodes();
    let mut raw_labels: Vec<Option<String>> = vec![None; n];
    for (i, item) in data_lines(source).enumerate() {
        let (line_no, line) = item?;
        let toks = tokens(&line);
        if toks.len() < 2 {
            return Err(Error::Parse {
                line: line_no,
                message: "expected '<node-id> <label>'".into(),
            });
        }
        let Some(node) = graph.index_of(toks[0]) else {
            if i == 0 {
                continue;
            }
            return Err(Error::Parse {
                line: line_no,
                message: format!("unknown node id '{}'", toks[0]),
            });
        };
        if raw_labels[node].replace(toks[1].to_string()).is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("node '{}' labeled twice", toks[0]),
            });
        }
    }
    if let Some(missing) = raw_labels.iter().position(Option::is_none) {
        return Err(Error::InvalidArgument(format!(
            "label file has no entry for node '{}'",
            graph.node_ids()[missing]
        )));
    }
    let (labels, names) = encode_labels(raw_labels);
    graph.with_labels(labels, names)
}

fn encode_labels(raw: Vec<Option<String>>) -> (Vec<usize>, Vec<String>) {
    let names: Vec<String> = raw
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let lookup: HashMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let labels = raw
        .iter()
        .map(|l| lookup[l.as_deref().expect("every node labeled")])
        .collect();
    (labels, names)
}
