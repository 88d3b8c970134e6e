//! Periodic building blocks for the Fourier analysis: circulant operators
//! wrapped from interior stencils, FFT-based pseudo-inverses, and torus
//! variants of the smoothers.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::dense::DenseCholesky;
use crate::error::Result;
use crate::sparse::SparseOperator;

use super::Stencil;

#[inline]
pub fn wrap(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}

/// Circulant operator on the n x n torus built from a centered 2D stencil.
pub fn circulant_from_stencil(n: usize, st: &Stencil) -> SparseOperator {
    let p = st.radius() as i64;
    let mut trip = Vec::with_capacity(n * n * st.values.len());
    for i in 0..n as i64 {
        for j in 0..n as i64 {
            let row = i as usize * n + j as usize;
            for a in -p..=p {
                for b in -p..=p {
                    let v = st.at(a, b);
                    if v != 0.0 {
                        trip.push((row, wrap(i + a, n) * n + wrap(j + b, n), v));
                    }
                }
            }
        }
    }
    SparseOperator::from_triplets(n * n, n * n, trip)
}

/// Circulant same-mesh transfer from a separable 1D coefficient row:
/// `op[(i,j), (i+anchor+s, j+anchor+t)] = c[s] c[t]` (indices wrapped).
pub fn circulant_separable(n: usize, anchor: i64, c: &[f64]) -> SparseOperator {
    let mut trip = Vec::with_capacity(n * n * c.len() * c.len());
    for i in 0..n as i64 {
        for j in 0..n as i64 {
            let row = i as usize * n + j as usize;
            for (s, &cs) in c.iter().enumerate() {
                let col_i = wrap(i + anchor + s as i64, n) * n;
                for (t, &ct) in c.iter().enumerate() {
                    trip.push((row, col_i + wrap(j + anchor + t as i64, n), cs * ct));
                }
            }
        }
    }
    SparseOperator::from_triplets(n * n, n * n, trip)
}

/// Prolongation from the (n/2)-torus to the n-torus: columns carry the
/// tensor subdivision mask.
pub fn mesh_prolongation_torus(n: usize, mask: &[f64]) -> SparseOperator {
    assert!(n % 2 == 0);
    let nc = n / 2;
    let mut trip = Vec::with_capacity(nc * nc * mask.len() * mask.len());
    for i in 0..nc as i64 {
        for j in 0..nc as i64 {
            let col = i as usize * nc + j as usize;
            for (k, &mk) in mask.iter().enumerate() {
                let row_i = wrap(2 * i + k as i64, n) * n;
                for (l, &ml) in mask.iter().enumerate() {
                    trip.push((row_i + wrap(2 * j + l as i64, n), col, mk * ml));
                }
            }
        }
    }
    SparseOperator::from_triplets(n * n, nc * nc, trip)
}

/// Subdivision mask of the degree-q cardinal B-spline: binom(q+1, k) / 2^q.
pub fn subdivision_mask(q: usize) -> Vec<f64> {
    let mut mask = Vec::with_capacity(q + 2);
    let mut binom = 1.0f64;
    for k in 0..=q + 1 {
        mask.push(binom / (1u64 << q) as f64);
        binom = binom * (q + 1 - k) as f64 / (k + 1) as f64;
    }
    mask
}

/// Exact solver for a singular circulant stencil operator: divides by the
/// symbol in Fourier space, zeroing the constant mode (pseudo-inverse on
/// the complement of constants).
pub struct SymbolPseudoInverse {
    n: usize,
    symbol: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl SymbolPseudoInverse {
    pub fn new(n: usize, st: &Stencil) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let p = st.radius() as i64;
        let mut symbol = vec![0.0f64; n * n];
        for k1 in 0..n {
            let t1 = 2.0 * std::f64::consts::PI * k1 as f64 / n as f64;
            for k2 in 0..n {
                let t2 = 2.0 * std::f64::consts::PI * k2 as f64 / n as f64;
                let mut s = 0.0;
                for a in -p..=p {
                    for b in -p..=p {
                        s += st.at(a, b) * (t1 * a as f64 + t2 * b as f64).cos();
                    }
                }
                symbol[k1 * n + k2] = s;
            }
        }
        SymbolPseudoInverse {
            n,
            symbol,
            fwd,
            inv,
        }
    }

    pub fn apply(&self, d: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(d.len(), n * n);
        let mut buf: Vec<Complex64> = d.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft2(&self.fwd, n, &mut buf);
        let floor = 1e-13
            * self
                .symbol
                .iter()
                .fold(0.0f64, |acc, &s| acc.max(s.abs()));
        for (z, &s) in buf.iter_mut().zip(&self.symbol) {
            if s.abs() <= floor {
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z /= s;
            }
        }
        fft2(&self.inv, n, &mut buf);
        let scale = 1.0 / (n * n) as f64;
        buf.iter().map(|z| z.re * scale).collect()
    }
}

/// In-place 2D FFT: 1D transforms over rows, then over columns.
fn fft2(plan: &Arc<dyn Fft<f64>>, n: usize, buf: &mut [Complex64]) {
    for row in buf.chunks_exact_mut(n) {
        plan.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = buf[i * n + j];
        }
        plan.process(&mut col);
        for i in 0..n {
            buf[i * n + j] = col[i];
        }
    }
}

/// Schwarz sweep on the torus: every grid point is a block center, windows
/// wrap instead of clipping, so a single factorization serves every block.
pub struct TorusSchwarzPlan {
    n: usize,
    w: usize,
    order: Vec<u32>,
    chol: DenseCholesky,
}

impl TorusSchwarzPlan {
    pub fn new(n: usize, w: usize, st: &Stencil, three_colour: bool) -> Result<Self> {
        let mut order: Vec<u32> = (0..(n * n) as u32).collect();
        if three_colour {
            order.sort_by_key(|&c| crate::smoothers::three_colour_of(c as usize / n, c as usize % n));
        }
        // Block matrix: A[(c+a), (c+b)] = stencil(b - a), identical for all
        // centers. Offsets stay below n/2, so wrapped entries never merge.
        let bw = 2 * w + 1;
        let nb = bw * bw;
        let mut dense = vec![0.0f64; nb * nb];
        for ax in 0..bw as i64 {
            for ay in 0..bw as i64 {
                let row = (ax * bw as i64 + ay) as usize;
                for bx in 0..bw as i64 {
                    for by in 0..bw as i64 {
                        let col = (bx * bw as i64 + by) as usize;
                        dense[row * nb + col] = st.at(bx - ax, by - ay);
                    }
                }
            }
        }
        let chol = DenseCholesky::factor(nb, &dense)?;
        Ok(TorusSchwarzPlan { n, w, order, chol })
    }

    /// Applies the sweep's error propagation: one sweep with b = 0.
    pub fn apply_error(&self, a: &SparseOperator, x: &mut [f64]) {
        let n = self.n;
        let bw = 2 * self.w + 1;
        let mut idx = vec![0usize; bw * bw];
        let mut r = vec![0.0f64; bw * bw];
        let w = self.w as i64;
        for &c in &self.order {
            let (cx, cy) = (c as usize / n, c as usize % n);
            let mut k = 0;
            for a_off in -w..=w {
                let row_i = wrap(cx as i64 + a_off, n) * n;
                for b_off in -w..=w {
                    idx[k] = row_i + wrap(cy as i64 + b_off, n);
                    k += 1;
                }
            }
            for (li, &g) in idx.iter().enumerate() {
                r[li] = -a.row_dot(g, x);
            }
            self.chol.solve_in_place(&mut r);
            for (li, &g) in idx.iter().enumerate() {
                x[g] += r[li];
            }
        }
    }
}

/// Red-black sweep on the torus (n even), error-propagation form.
pub fn rb_gs_error_sweep(a: &SparseOperator, n: usize, diag: f64, x: &mut [f64]) {
    for phase in 0..2 {
        for i in 0..n {
            let mut j = (phase + i) % 2;
            while j < n {
                let g = i * n + j;
                x[g] -= a.row_dot(g, x) / diag;
                j += 2;
            }
        }
    }
}
