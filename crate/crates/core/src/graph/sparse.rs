use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Compressed-sparse-row matrix of `f64`.
///
/// Column indices within a row are strictly increasing, so there are never
/// duplicate coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from coordinate triplets; duplicate coordinates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::Shape(format!(
                    "entry ({r}, {c}) outside {rows}x{cols} matrix"
                )));
            }
            per_row[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in per_row {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().expect("entry pushed for last column") += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(dense: ArrayView2<f64>) -> Self {
        let (rows, cols) = dense.dim();
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = dense[[r, c]];
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (idx, vals) = self.row(r);
        match idx.binary_search(&c) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (idx, vals) = self.row(r);
            idx.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).1.iter().sum()).collect()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows, self.cols));
        for (r, c, v) in self.iter() {
            out[[r, c]] = v;
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.rows {
            let (idx, vals) = self.row(r);
            for (&c, &v) in idx.iter().zip(vals) {
                let pos = next[c];
                indices[pos] = r;
                values[pos] = v;
                next[c] += 1;
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            indptr,
            indices,
            values,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && *self == self.transpose()
    }

    /// Returns `diag(left) * self * diag(right)`.
    pub fn scale(&self, left: &[f64], right: &[f64]) -> Self {
        let mut out = self.clone();
        for r in 0..self.rows {
            for pos in self.indptr[r]..self.indptr[r + 1] {
                out.values[pos] = left[r] * self.values[pos] * right[self.indices[pos]];
            }
        }
        out
    }

    /// Replaces every stored value with 1.
    pub fn binarize(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = 1.0);
        out
    }

    /// Sparse × dense product, accumulating each row in ascending column order.
    pub fn matmul_dense(&self, b: ArrayView2<f64>) -> Result<Array2<f64>> {
        if self.cols != b.nrows() {
            return Err(Error::Shape(format!(
                "sparse {}x{} times dense {}x{}",
                self.rows,
                self.cols,
                b.nrows(),
                b.ncols()
            )));
        }
        let mut out = Array2::zeros((self.rows, b.ncols()));
        for (r, mut out_row) in out.outer_iter_mut().enumerate() {
            let (idx, vals) = self.row(r);
            for (&c, &v) in idx.iter().zip(vals) {
                out_row.scaled_add(v, &b.row(c));
            }
        }
        Ok(out)
    }

    /// `selfᵀ × b` without materializing the transpose.
    pub fn transpose_matmul_dense(&self, b: ArrayView2<f64>) -> Result<Array2<f64>> {
        if self.rows != b.nrows() {
            return Err(Error::Shape(format!(
                "transposed sparse {}x{} times dense {}x{}",
                self.cols,
                self.rows,
                b.nrows(),
                b.ncols()
            )));
        }
        let mut out = Array2::zeros((self.cols, b.ncols()));
        for r in 0..self.rows {
            let (idx, vals) = self.row(r);
            let b_row = b.row(r);
            for (&c, &v) in idx.iter().zip(vals) {
                out.row_mut(c).scaled_add(v, &b_row);
            }
        }
        Ok(out)
    }

    /// Sparse × sparse product.
    pub fn matmul_sparse(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "sparse {}x{} times sparse {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut accum = vec![0.0; other.cols];
        let mut touched = vec![false; other.cols];
        let mut cols_in_row: Vec<usize> = Vec::new();
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.rows {
            let (idx, vals) = self.row(r);
            for (&k, &a) in idx.iter().zip(vals) {
                let (oidx, ovals) = other.row(k);
                for (&c, &b) in oidx.iter().zip(ovals) {
                    if !touched[c] {
                        touched[c] = true;
                        cols_in_row.push(c);
                    }
                    accum[c] += a * b;
                }
            }
            cols_in_row.sort_unstable();
            for &c in &cols_in_row {
                if accum[c] != 0.0 {
                    indices.push(c);
                    values.push(accum[c]);
                }
                accum[c] = 0.0;
                touched[c] = false;
            }
            cols_in_row.clear();
            indptr.push(indices.len());
        }
        Ok(SparseMatrix {
            rows: self.rows,
            cols: other.cols,
            indptr,
            indices,
            values,
        })
    }
}
