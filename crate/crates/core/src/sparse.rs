//! Compressed-row sparse matrices and the small set of operations the
//! assembly, transfer and solver layers need.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Sparse matrix in compressed row storage. Rows are sorted by column index
/// and hold no duplicate columns.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Builds from (row, col, value) triplets. Duplicate coordinates are
    /// summed in insertion order, so the result is deterministic for a fixed
    /// triplet sequence.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Self {
        for &(i, j, _) in &triplets {
            debug_assert!(i < nrows && j < ncols, "triplet out of bounds");
        }
        // Stable sort keeps insertion order within duplicate coordinates.
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_counts = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_counts[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_counts[i + 1] += row_counts[i];
        }
        SparseOperator {
            nrows,
            ncols,
            row_ptr: row_counts,
            col_idx,
            values,
        }
    }

    /// Assembles from prebuilt CSR arrays; rows must be sorted by column
    /// with no duplicates.
    pub fn from_csr_parts(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(row_ptr.len(), nrows + 1);
        debug_assert_eq!(col_idx.len(), values.len());
        debug_assert_eq!(*row_ptr.last().unwrap(), col_idx.len());
        debug_assert!(col_idx.iter().all(|&j| j < ncols));
        SparseOperator {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseOperator {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// Entry (i, j), zero when absent.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        let mut acc = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            acc += v * x[j];
        }
        acc
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            y[i] = self.row_dot(i, x);
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    /// r = b - A x
    pub fn residual(&self, b: &[f64], x: &[f64], r: &mut [f64]) {
        for i in 0..self.nrows {
            r[i] = b[i] - self.row_dot(i, x);
        }
    }

    pub fn transpose(&self) -> SparseOperator {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut row_ptr = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let slot = row_ptr[j];
                col_idx[slot] = i;
                values[slot] = v;
                row_ptr[j] += 1;
            }
        }
        // `counts` still holds the row offsets; column order within each
        // transposed row follows the source row order, which is ascending.
        SparseOperator {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: counts,
            col_idx,
            values,
        }
    }

    /// C = A * B with a dense accumulator per row.
    pub fn matmul(&self, rhs: &SparseOperator) -> Result<SparseOperator> {
        if self.ncols != rhs.nrows {
            return Err(Error::param(format!(
                "matmul dimension mismatch: {}x{} * {}x{}",
                self.nrows, self.ncols, rhs.nrows, rhs.ncols
            )));
        }
        let mut acc = vec![0.0f64; rhs.ncols];
        let mut mark = vec![false; rhs.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&k, &v) in cols.iter().zip(vals) {
                let (bcols, bvals) = rhs.row(k);
                for (&j, &w) in bcols.iter().zip(bvals) {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    acc[j] += v * w;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_idx.push(j);
                values.push(acc[j]);
                acc[j] = 0.0;
                mark[j] = false;
            }
            touched.clear();
            row_ptr.push(col_idx.len());
        }
        Ok(SparseOperator {
            nrows: self.nrows,
            ncols: rhs.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Kronecker product; row/column index layout is `i_a * n_b + i_b`.
    pub fn kron(a: &SparseOperator, b: &SparseOperator) -> SparseOperator {
        let nrows = a.nrows * b.nrows;
        let ncols = a.ncols * b.ncols;
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(a.nnz() * b.nnz());
        let mut values = Vec::with_capacity(a.nnz() * b.nnz());
        row_ptr.push(0);
        for ia in 0..a.nrows {
            let (acols, avals) = a.row(ia);
            for ib in 0..b.nrows {
                let (bcols, bvals) = b.row(ib);
                for (&ja, &va) in acols.iter().zip(avals) {
                    for (&jb, &vb) in bcols.iter().zip(bvals) {
                        col_idx.push(ja * b.ncols + jb);
                        values.push(va * vb);
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        SparseOperator {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Scales row i by `factors[i]`.
    pub fn scale_rows(&mut self, factors: &[f64]) {
        assert_eq!(factors.len(), self.nrows);
        for i in 0..self.nrows {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            for v in &mut self.values[lo..hi] {
                *v *= factors[i];
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows.min(self.ncols)];
        for (i, di) in d.iter_mut().enumerate() {
            *di = self.entry(i, i);
        }
        d
    }

    /// max |A - A^T| over all entries; zero for a symmetric matrix.
    pub fn max_abs_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.entry(j, i)).abs());
            }
        }
        worst
    }

    /// Keeps rows `rows` and columns `cols` (contiguous ranges).
    pub fn submatrix(
        &self,
        rows: std::ops::Range<usize>,
        cols: std::ops::Range<usize>,
    ) -> SparseOperator {
        let mut trip = Vec::new();
        for i in rows.clone() {
            let (cidx, vals) = self.row(i);
            for (&j, &v) in cidx.iter().zip(vals) {
                if cols.contains(&j) {
                    trip.push((i - rows.start, j - cols.start, v));
                }
            }
        }
        SparseOperator::from_triplets(rows.len(), cols.len(), trip)
    }

    /// Half bandwidth: max |i - j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0usize;
        for i in 0..self.nrows {
            let (cols, _) = self.row(i);
            for &j in cols {
                bw = bw.max(i.abs_diff(j));
            }
        }
        bw
    }

    /// Matrix Market coordinate text form (1-based indices).
    pub fn to_matrix_market(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "%%MatrixMarket matrix coordinate real general");
        let _ = writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v);
            }
        }
        out
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
