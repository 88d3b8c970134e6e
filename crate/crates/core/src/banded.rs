//! Banded Cholesky factorization for the direct coarse-level solves.
//!
//! Tensor-product spline stiffness matrices in lexicographic ordering have a
//! tight band, so a band factorization covers every direct solve in the
//! hierarchy without fill-in bookkeeping.

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

/// Lower band factor: `data[i*(bw+1) + (j - i + bw)]` holds `L[i][j]`
/// for `i - bw <= j <= i`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &SparseOperator) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::param("banded factorization requires a square matrix"));
        }
        let n = a.nrows();
        let bw = a.bandwidth();
        let stride = bw + 1;
        let mut data = vec![0.0f64; n * stride];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    data[i * stride + (j + bw - i)] = v;
                }
            }
        }
        for i in 0..n {
            let j_lo = i.saturating_sub(bw);
            for j in j_lo..=i {
                let mut s = data[i * stride + (j + bw - i)];
                let k_lo = j_lo.max(j.saturating_sub(bw));
                for k in k_lo..j {
                    s -= data[i * stride + (k + bw - i)] * data[j * stride + (k + bw - j)];
                }
                if j == i {
                    if s <= 0.0 {
                        return Err(Error::numerical(format!(
                            "banded Cholesky breakdown at pivot {i}: {s:.3e} <= 0"
                        )));
                    }
                    data[i * stride + bw] = s.sqrt();
                } else {
                    data[i * stride + (j + bw - i)] = s / data[j * stride + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let (n, bw, stride) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.data[i * stride + (k + bw - i)] * x[k];
            }
            x[i] = s / self.data[i * stride + bw];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            let k_hi = (i + bw).min(n - 1);
            for k in i + 1..=k_hi {
                s -= self.data[k * stride + (i + bw - k)] * x[k];
            }
            x[i] = s / self.data[i * stride + bw];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
