//! Compressed sparse row storage for real matrices.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

/// A sparse matrix in compressed sparse row form.
///
/// Built from coordinate triplets; duplicate `(row, col)` pairs are rejected
/// rather than summed, so every stored entry has a single unambiguous source.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Canonicalizes `(row, col, value)` triplets into CSR storage.
    ///
    /// Indices must be in range and pairwise distinct; values must be finite.
    /// Explicit zeros are kept (they are legal entries, just wasteful).
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::dim(format!(
                    "triplet ({r}, {c}) out of range for a {rows}x{cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: "sparse triplets",
                    row: r,
                    col: c,
                    value: v,
                });
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&i| (triplets[i].0, triplets[i].1));
        for w in order.windows(2) {
            let a = triplets[w[0]];
            let b = triplets[w[1]];
            if a.0 == b.0 && a.1 == b.1 {
                return Err(Error::dim(format!(
                    "duplicate sparse entry at ({}, {})",
                    a.0, a.1
                )));
            }
        }
        let mut row_ptr = vec![0usize; rows + 1];
        for &(r, _, _) in triplets {
            row_ptr[r + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut col_idx = vec![0usize; triplets.len()];
        let mut values = vec![0.0f64; triplets.len()];
        for (slot, &i) in order.iter().enumerate() {
            let (_, c, v) = triplets[i];
            col_idx[slot] = c;
            values[slot] = v;
        }
        Ok(SparseMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Sparsifies a dense matrix, keeping entries with `|a_ij| > 0`.
    pub fn from_dense(a: &Array2<f64>) -> Result<Self> {
        let mut triplets = Vec::new();
        for ((r, c), &v) in a.indexed_iter() {
            if v != 0.0 {
                triplets.push((r, c, v));
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    /// `y = A · x`.
    pub fn matvec(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        assert_eq!(x.len(), self.cols, "matvec length mismatch");
        let mut y = Array1::zeros(self.rows);
        for r in 0..self.rows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
        y
    }

    /// `y = Aᵀ · x`.
    pub fn matvec_transpose(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        assert_eq!(x.len(), self.rows, "transpose matvec length mismatch");
        let mut y = Array1::zeros(self.cols);
        for r in 0..self.rows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += self.values[k] * xr;
            }
        }
        y
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.rows, self.cols));
        for (r, c, v) in self.iter() {
            a[[r, c]] = v;
        }
        a
    }

    /// Frobenius norm of the stored entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
