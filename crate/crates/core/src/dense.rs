//! Small dense kernels: packed Cholesky for the Schwarz block solves and a
//! pivoted Gaussian elimination used by test oracles.

use crate::error::{Error, Result};

/// Cholesky factor of a small SPD matrix, lower triangle packed row-wise:
/// `l[i*(i+1)/2 + j]` holds `L[i][j]` for `j <= i`.
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
}

impl DenseCholesky {
    /// Factors a row-major `n x n` matrix; only the lower triangle is read.
    pub fn factor(n: usize, a: &[f64]) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut l = vec![0.0f64; n * (n + 1) / 2];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                let (ri, rj) = (i * (i + 1) / 2, j * (j + 1) / 2);
                for k in 0..j {
                    s -= l[ri + k] * l[rj + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(Error::numerical(format!(
                            "Cholesky breakdown at pivot {i}: {s:.3e} <= 0"
                        )));
                    }
                    l[ri + j] = s.sqrt();
                } else {
                    l[ri + j] = s / l[rj + j];
                }
            }
        }
        Ok(DenseCholesky { n, l })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves A x = b in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        assert_eq!(x.len(), n);
        // L y = b
        for i in 0..n {
            let ri = i * (i + 1) / 2;
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[ri + k] * x[k];
            }
            x[i] = s / self.l[ri + i];
        }
        // L^T x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * (k + 1) / 2 + i] * x[k];
            }
            x[i] = s / self.l[i * (i + 1) / 2 + i];
        }
    }
}

/// Dense solve with partial pivoting. Consumes its inputs; intended for
/// small systems in oracles and reference computations.
pub fn solve_dense(n: usize, mut a: Vec<f64>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return Err(Error::numerical("singular matrix in dense solve"));
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[r * n + j] -= f * a[col * n + j];
            }
            b[r] -= f * b[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[i * n + j] * b[j];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        // A = [[4,2],[2,3]], b = [8, 7] -> x = [1.25, 1.5]
        let ch = DenseCholesky::factor(2, &[4.0, 2.0, 2.0, 3.0]).unwrap();
        let mut x = vec![8.0, 7.0];
        ch.solve_in_place(&mut x);
        assert!((x[0] - 1.25).abs() < 1e-14);
        assert!((x[1] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        assert!(DenseCholesky::factor(2, &[1.0, 2.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn dense_solve_with_pivoting() {
        let a = vec![0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let x = solve_dense(3, a.clone(), vec![5.0, 4.0, 3.0]).unwrap();
        for i in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                s += a[i * 3 + j] * x[j];
            }
            assert!((s - [5.0, 4.0, 3.0][i]).abs() < 1e-12);
        }
    }
}
