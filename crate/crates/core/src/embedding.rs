use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Provenance attached to every embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTag {
    pub model: String,
    pub seed: u64,
    pub run: usize,
    #[serde(default)]
    pub hyperparameters: serde_json::Value,
}

impl EmbeddingTag {
    pub fn new(model: impl Into<String>, seed: u64, run: usize, hyperparameters: serde_json::Value) -> Self {
        Self {
            model: model.into(),
            seed,
            run,
            hyperparameters,
        }
    }
}

/// Dense `n_nodes × d` node embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub matrix: Array2<f64>,
    pub tag: EmbeddingTag,
}

impl Embedding {
    pub fn new(matrix: Array2<f64>, tag: EmbeddingTag) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "embedding from {} contains non-finite entries",
                tag.model
            )));
        }
        Ok(Self { matrix, tag })
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Writes `node_id,z_0,...,z_{d-1}` rows.
    pub fn write_csv(&self, node_ids: &[String], out: impl Write) -> Result<()> {
        if node_ids.len() != self.n_nodes() {
            return Err(Error::Shape(format!(
                "{} node ids for {} embedding rows",
                node_ids.len(),
                self.n_nodes()
            )));
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["node_id".to_string()];
        header.extend((0..self.dim()).map(|j| format!("z_{j}")));
        w.write_record(&header)?;
        for (id, row) in node_ids.iter().zip(self.matrix.outer_iter()) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`Embedding::write_csv`]; rows must follow
    /// `node_ids` order.
    pub fn read_csv(input: impl Read, node_ids: &[String], tag: EmbeddingTag) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let dim = r.headers()?.len().saturating_sub(1);
        let mut data = Vec::with_capacity(node_ids.len() * dim);
        let mut rows = 0;
        for rec in r.records() {
            let rec = rec?;
            if rows >= node_ids.len() || rec.get(0) != Some(node_ids[rows].as_str()) {
                return Err(Error::Shape(format!("embedding row {rows} does not match node order")));
            }
            for field in rec.iter().skip(1) {
                data.push(field.parse::<f64>().map_err(|_| Error::Parse {
                    line: rows + 2,
                    message: format!("'{field}' is not a number"),
                })?);
            }
            rows += 1;
        }
        if rows != node_ids.len() {
            return Err(Error::Shape(format!("{rows} embedding rows for {} nodes", node_ids.len())));
        }
        let matrix = Array2::from_shape_vec((rows, dim), data)
            .map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(matrix, tag)
    }
}
