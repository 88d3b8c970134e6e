//! Rigorous local Fourier analysis on a doubly periodic torus grid.
//!
//! All operators of the two-level method (including the colour-ordered
//! multiplicative Schwarz sweep, which is not translation invariant) are
//! built with periodic wrap-around from their interior stencils, and the
//! spectral radius of the composed error-propagation operator is computed
//! directly by power iteration on the complement of the constant mode.

pub mod torus;

use rayon::prelude::*;

use crate::assembly::{assemble_mass_1d, assemble_stiffness};
use crate::error::{Error, Result};
use crate::smoothers::{BlockSize, Colouring};
use crate::sparse::{dot, norm2, SparseOperator};
use crate::spline::{SplineSpace1D, SplineSpace2D};
use crate::spline::geometry::GeometryMap;

use torus::{
    circulant_from_stencil, circulant_separable, mesh_prolongation_torus, rb_gs_error_sweep,
    subdivision_mask, SymbolPseudoInverse, TorusSchwarzPlan,
};

/// Default torus extent; divisible by 6 so red-black, three-colour striping
/// and dyadic coarsening all wrap consistently.
pub const DEFAULT_TORUS_EXTENT: usize = 48;

/// Default power-iteration tolerance on successive Rayleigh quotients.
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// Centered interior stencil of a translation-invariant operator.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub degree: usize,
    /// 2p + 1 entries per direction.
    pub width: usize,
    /// Row-major, index ((a + p) * width + (b + p)).
    pub values: Vec<f64>,
}

impl Stencil {
    pub fn radius(&self) -> usize {
        (self.width - 1) / 2
    }

    #[inline]
    pub fn at(&self, a: i64, b: i64) -> f64 {
        let r = self.radius() as i64;
        if a.abs() > r || b.abs() > r {
            return 0.0;
        }
        self.values[((a + r) as usize) * self.width + (b + r) as usize]
    }

    pub fn row_sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Interior row of the degree-p stiffness matrix on the identity square,
/// read from an assembled operator far from the boundary; independent of
/// the mesh used to extract it.
pub fn interior_stencil(p: usize) -> Result<Stencil> {
    if p < 1 {
        return Err(Error::param("stencil extraction requires degree >= 1"));
    }
    interior_stencil_at(p, 4 * p + 4)
}

/// Extraction at an explicit mesh; `m` must leave the central row fully in
/// the uniform interior.
pub fn interior_stencil_at(p: usize, m: usize) -> Result<Stencil> {
    if m < 4 * p + 4 {
        return Err(Error::param(format!(
            "stencil extraction needs m >= {} (got {m})",
            4 * p + 4
        )));
    }
    let space = SplineSpace2D::bspline(p, m, true)?;
    let a = assemble_stiffness(&space, &GeometryMap::IdentitySquare)?;
    let (nx, ny) = space.dims();
    let c = nx / 2;
    let width = 2 * p + 1;
    let mut values = vec![0.0; width * width];
    let (cols, vals) = a.row(space.global(c, c));
    for (&col, &v) in cols.iter().zip(vals) {
        let (cx, cy) = (col / ny, col % ny);
        let (da, db) = (cx as i64 - c as i64, cy as i64 - c as i64);
        debug_assert!(da.abs() <= p as i64 && db.abs() <= p as i64);
        values[((da + p as i64) as usize) * width + (db + p as i64) as usize] = v;
    }
    Ok(Stencil {
        degree: p,
        width,
        values,
    })
}

/// Interior row of the lumped degree restriction in one dimension: the
/// central row of the cross mass between the p_low and p spaces divided by
/// the lumped (row-sum) coarse mass. Returns the offset of the first
/// coefficient relative to the row index.
pub fn degree_restriction_row_1d(p_low: usize, p: usize) -> Result<(i64, Vec<f64>)> {
    let m_ref = 4 * p + 4;
    let row_space = SplineSpace1D::bspline(p_low, m_ref, false)?;
    let col_space = SplineSpace1D::bspline(p, m_ref, false)?;
    let cross = assemble_mass_1d(&row_space, &col_space)?;
    let coarse_mass = assemble_mass_1d(&row_space, &row_space)?;
    let i0 = (m_ref + p_low) / 2;
    let (ccols, cvals) = coarse_mass.row(i0);
    let _ = ccols;
    let lump: f64 = cvals.iter().sum();
    let (cols, vals) = cross.row(i0);
    let anchor = cols[0] as i64 - i0 as i64;
    let row: Vec<f64> = vals.iter().map(|&v| v / lump).collect();
    Ok((anchor, row))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Exact coarse solve at the same mesh: T = (I - P A_c^+ R A) S.
    TwoGrid,
    /// Coarse solve replaced by one V(1,1) red-black Gauss-Seidel two-grid
    /// step towards the 2h mesh.
    ThreeGrid,
    /// Exact coarse solve at degree p_low and mesh 2h.
    TwoGridAggressive,
    /// The Schwarz sweep alone.
    SmootherOnly,
}

enum Parts {
    SmootherOnly,
    TwoGrid {
        r_deg: SparseOperator,
        p_deg: SparseOperator,
        coarse_pinv: SymbolPseudoInverse,
    },
    ThreeGrid {
        r_deg: SparseOperator,
        p_deg: SparseOperator,
        a_low: SparseOperator,
        low_diag: f64,
        low_pinv: SymbolPseudoInverse,
        p_mesh: SparseOperator,
        r_mesh: SparseOperator,
        pinv_2h: SymbolPseudoInverse,
    },
    Aggressive {
        r_ag: SparseOperator,
        p_ag: SparseOperator,
        pinv_2h: SymbolPseudoInverse,
    },
}

/// Periodic realization of one error-propagation operator.
pub struct TorusProblem {
    pub n: usize,
    pub p: usize,
    pub p_low: usize,
    pub block: BlockSize,
    pub variant: Variant,
    pub nu1: usize,
    pub nu2: usize,
    a_fine: SparseOperator,
    plan: TorusSchwarzPlan,
    parts: Parts,
}

#[allow(clippy::too_many_arguments)]
pub fn build_torus_problem(
    p: usize,
    p_low: usize,
    block: BlockSize,
    variant: Variant,
    n: usize,
    nu1: usize,
    nu2: usize,
    colouring: Colouring,
) -> Result<TorusProblem> {
    if n % 6 != 0 {
        return Err(Error::param(format!("torus extent must be divisible by 6 (got {n})")));
    }
    if n < 2 * (2 * p + 1) {
        return Err(Error::param(format!(
            "torus extent {n} too small for degree {p} stencils"
        )));
    }
    if p_low > p {
        return Err(Error::param("p_low must not exceed p"));
    }
    let st_fine = interior_stencil(p)?;
    let a_fine = circulant_from_stencil(n, &st_fine);
    let plan = TorusSchwarzPlan::new(
        n,
        block.half_width(),
        &st_fine,
        colouring == Colouring::ThreeColour,
    )?;
    let parts = match variant {
        Variant::SmootherOnly => Parts::SmootherOnly,
        Variant::TwoGrid => {
            let (r_deg, p_deg) = degree_pair_torus(n, p_low, p)?;
            let st_low = interior_stencil(p_low)?;
            Parts::TwoGrid {
                r_deg,
                p_deg,
                coarse_pinv: SymbolPseudoInverse::new(n, &st_low),
            }
        }
        Variant::ThreeGrid => {
            let (r_deg, p_deg) = degree_pair_torus(n, p_low, p)?;
            let st_low = interior_stencil(p_low)?;
            let a_low = circulant_from_stencil(n, &st_low);
            let low_diag = st_low.at(0, 0);
            let p_mesh = mesh_prolongation_torus(n, &subdivision_mask(p_low));
            let r_mesh = p_mesh.transpose();
            Parts::ThreeGrid {
                r_deg,
                p_deg,
                low_pinv: SymbolPseudoInverse::new(n, &st_low),
                a_low,
                low_diag,
                p_mesh,
                r_mesh,
                pinv_2h: SymbolPseudoInverse::new(n / 2, &st_low),
            }
        }
        Variant::TwoGridAggressive => {
            let (r_deg, p_deg) = degree_pair_torus(n, p_low, p)?;
            let st_low = interior_stencil(p_low)?;
            let p_mesh = mesh_prolongation_torus(n, &subdivision_mask(p_low));
            let r_mesh = p_mesh.transpose();
            let r_ag = r_mesh.matmul(&r_deg)?;
            let p_ag = p_deg.matmul(&p_mesh)?;
            Parts::Aggressive {
                r_ag,
                p_ag,
                pinv_2h: SymbolPseudoInverse::new(n / 2, &st_low),
            }
        }
    };
    Ok(TorusProblem {
        n,
        p,
        p_low,
        block,
        variant,
        nu1,
        nu2,
        a_fine,
        plan,
        parts,
    })
}

/// Circulant degree-transfer pair on the n-torus; identity when the degrees
/// coincide (exact mass inverse).
fn degree_pair_torus(n: usize, p_low: usize, p: usize) -> Result<(SparseOperator, SparseOperator)> {
    if p_low == p {
        let id = SparseOperator::identity(n * n);
        return Ok((id.clone(), id));
    }
    let (anchor, row) = degree_restriction_row_1d(p_low, p)?;
    let r = circulant_separable(n, anchor, &row);
    let p_op = r.transpose();
    Ok((r, p_op))
}

impl TorusProblem {
    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    pub fn coarse_dim(&self) -> usize {
        match &self.parts {
            Parts::SmootherOnly => 0,
            Parts::TwoGrid { .. } | Parts::ThreeGrid { .. } => self.n * self.n,
            Parts::Aggressive { .. } => (self.n / 2) * (self.n / 2),
        }
    }

    /// Applies the error-propagation operator once.
    pub fn apply_error(&self, e: &[f64]) -> Vec<f64> {
        let mut x = e.to_vec();
        for _ in 0..self.nu1 {
            self.plan.apply_error(&self.a_fine, &mut x);
        }
        match &self.parts {
            Parts::SmootherOnly => {}
            Parts::TwoGrid {
                r_deg,
                p_deg,
                coarse_pinv,
            } => {
                let ax = self.a_fine.matvec_alloc(&x);
                let d = r_deg.matvec_alloc(&ax);
                let e_c = coarse_pinv.apply(&d);
                let up = p_deg.matvec_alloc(&e_c);
                for (xi, ui) in x.iter_mut().zip(&up) {
                    *xi -= ui;
                }
            }
            Parts::ThreeGrid {
                r_deg,
                p_deg,
                a_low,
                low_diag,
                low_pinv,
                p_mesh,
                r_mesh,
                pinv_2h,
            } => {
                let ax = self.a_fine.matvec_alloc(&x);
                let d = r_deg.matvec_alloc(&ax);
                // Exact coarse correction in p_low coordinates...
                let y = low_pinv.apply(&d);
                // ...then subtract the part the inner V(1,1) step misses:
                // the applied correction is (I - M_inner) y.
                let mut v = y.clone();
                rb_gs_error_sweep(a_low, self.n, *low_diag, &mut v);
                let dv = a_low.matvec_alloc(&v);
                let dc = r_mesh.matvec_alloc(&dv);
                let ec = pinv_2h.apply(&dc);
                let up_inner = p_mesh.matvec_alloc(&ec);
                for (vi, ui) in v.iter_mut().zip(&up_inner) {
                    *vi -= ui;
                }
                rb_gs_error_sweep(a_low, self.n, *low_diag, &mut v);
                let applied: Vec<f64> = y.iter().zip(&v).map(|(yi, vi)| yi - vi).collect();
                let up = p_deg.matvec_alloc(&applied);
                for (xi, ui) in x.iter_mut().zip(&up) {
                    *xi -= ui;
                }
            }
            Parts::Aggressive {
                r_ag,
                p_ag,
                pinv_2h,
            } => {
                let ax = self.a_fine.matvec_alloc(&x);
                let d = r_ag.matvec_alloc(&ax);
                let e_c = pinv_2h.apply(&d);
                let up = p_ag.matvec_alloc(&e_c);
                for (xi, ui) in x.iter_mut().zip(&up) {
                    *xi -= ui;
                }
            }
        }
        for _ in 0..self.nu2 {
            self.plan.apply_error(&self.a_fine, &mut x);
        }
        x
    }
}

#[derive(Debug, Clone)]
pub struct LfaReport {
    pub variant: Variant,
    pub p: usize,
    pub p_low: usize,
    pub block: BlockSize,
    pub n: usize,
    pub rho: f64,
    /// Last change of the Rayleigh-quotient magnitude (or of the subspace
    /// radius in the fallback).
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

const POWER_CAP: usize = 700;
const SUBSPACE_CAP: usize = 700;
const STABLE_STEPS: usize = 4;
const GROWTH_WINDOW: usize = 12;

/// Dominant |eigenvalue| of the error operator on the complement of the
/// constant mode: power iteration with deflation, with a two-vector
/// subspace fallback for complex-pair dominance. Besides the Rayleigh
/// quotient, the windowed geometric mean of the norm growth is tracked,
/// which converges for oscillating (complex-pair) iterations as well.
pub fn spectral_factor(tp: &TorusProblem, tol: f64, seed: u64) -> LfaReport {
    use rand::{Rng, SeedableRng};
    let dim = tp.dim();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
    deflate_mean(&mut x);
    normalize(&mut x);

    let report = |rho: f64, residual: f64, converged: bool, iterations: usize| LfaReport {
        variant: tp.variant,
        p: tp.p,
        p_low: tp.p_low,
        block: tp.block,
        n: tp.n,
        rho,
        residual,
        converged,
        iterations,
    };

    let mut prev_rq: Option<f64> = None;
    let mut prev_growth: Option<f64> = None;
    let mut growths: Vec<f64> = Vec::with_capacity(POWER_CAP);
    let mut stable_rq = 0usize;
    let mut stable_growth = 0usize;
    let mut iterations = 0usize;
    let mut last_delta = f64::INFINITY;
    for _ in 0..POWER_CAP {
        iterations += 1;
        let mut y = tp.apply_error(&x);
        deflate_mean(&mut y);
        let ny = norm2(&y);
        if ny < 1e-13 {
            return report(ny, 0.0, true, iterations);
        }
        let rq = dot(&x, &y).abs();
        if let Some(prev) = prev_rq {
            last_delta = (rq - prev).abs();
            stable_rq = if last_delta < tol { stable_rq + 1 } else { 0 };
        }
        prev_rq = Some(rq);
        growths.push(ny);
        if growths.len() >= GROWTH_WINDOW {
            let tail = &growths[growths.len() - GROWTH_WINDOW..];
            let gm = (tail.iter().map(|g| g.ln()).sum::<f64>() / GROWTH_WINDOW as f64).exp();
            if let Some(prev) = prev_growth {
                let d = (gm - prev).abs();
                stable_growth = if d < tol { stable_growth + 1 } else { 0 };
                // The growth mean needs a longer stretch of agreement: its
                // window already averages over an oscillation period.
                if stable_growth >= 4 * STABLE_STEPS && iterations > 2 * GROWTH_WINDOW {
                    return report(gm, d, true, iterations);
                }
            }
            prev_growth = Some(gm);
        }
        x = y;
        for v in x.iter_mut() {
            *v /= ny;
        }
        if stable_rq >= STABLE_STEPS {
            return report(rq, last_delta, true, iterations);
        }
    }
    subspace_fallback(tp, tol, x, iterations)
}

/// Two-vector subspace iteration with a 2x2 Rayleigh-Ritz step; handles a
/// dominant complex pair.
fn subspace_fallback(tp: &TorusProblem, tol: f64, x: Vec<f64>, start_iters: usize) -> LfaReport {
    let mut v1 = x;
    let mut v2 = tp.apply_error(&v1);
    deflate_mean(&mut v2);
    orthonormalize(&mut v1, &mut v2);
    let mut prev: Option<f64> = None;
    let mut stable = 0usize;
    let mut radius;
    let mut delta = f64::INFINITY;
    let mut iterations = start_iters;
    let mut history: Vec<f64> = Vec::with_capacity(SUBSPACE_CAP);
    for _ in 0..SUBSPACE_CAP {
        iterations += 1;
        let mut w1 = tp.apply_error(&v1);
        let mut w2 = tp.apply_error(&v2);
        deflate_mean(&mut w1);
        deflate_mean(&mut w2);
        // H = V^T [w1 w2]
        let h = [dot(&v1, &w1), dot(&v1, &w2), dot(&v2, &w1), dot(&v2, &w2)];
        radius = max_eigenvalue_magnitude_2x2(h[0], h[1], h[2], h[3]);
        history.push(radius);
        if let Some(p) = prev {
            delta = (radius - p).abs();
            if delta < tol {
                stable += 1;
            } else {
                stable = 0;
            }
        }
        prev = Some(radius);
        v1 = w1;
        v2 = w2;
        orthonormalize(&mut v1, &mut v2);
        if stable >= STABLE_STEPS {
            return LfaReport {
                variant: tp.variant,
                p: tp.p,
                p_low: tp.p_low,
                block: tp.block,
                n: tp.n,
                rho: radius,
                residual: delta,
                converged: true,
                iterations,
            };
        }
    }
    // No stabilization within the cap: report the median of the recent
    // radius estimates, which damps the wander of clustered spectra.
    let mut tail: Vec<f64> = history[history.len().saturating_sub(33)..].to_vec();
    tail.sort_by(|a, b| a.total_cmp(b));
    LfaReport {
        variant: tp.variant,
        p: tp.p,
        p_low: tp.p_low,
        block: tp.block,
        n: tp.n,
        rho: tail[tail.len() / 2],
        residual: delta,
        converged: false,
        iterations,
    }
}

fn max_eigenvalue_magnitude_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (0.5 * (tr + s)).abs().max((0.5 * (tr - s)).abs())
    } else {
        det.abs().sqrt()
    }
}

fn deflate_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    for v in x.iter_mut() {
        *v -= mean;
    }
}

fn normalize(x: &mut [f64]) {
    let n = norm2(x);
    if n > 0.0 {
        for v in x.iter_mut() {
            *v /= n;
        }
    }
}

fn orthonormalize(v1: &mut [f64], v2: &mut [f64]) {
    normalize(v1);
    let proj = dot(v1, v2);
    for (b, a) in v2.iter_mut().zip(v1.iter()) {
        *b -= proj * a;
    }
    normalize(v2);
}

/// Sweep ordering whose torus factors match the published two-grid values;
/// the colour-reordered sweep converges faster and is the solver's
/// default, but the analysis tables correspond to the natural ordering.
pub const LFA_ORDERING: Colouring = Colouring::Lex;

/// One report per (p, block) cell, in row-major (p-major) order.
pub fn sweep_table(
    variant: Variant,
    ps: &[usize],
    blocks: &[BlockSize],
    p_low: usize,
    n: usize,
    tol: f64,
) -> Vec<Result<LfaReport>> {
    let cells: Vec<(usize, BlockSize)> = ps
        .iter()
        .flat_map(|&p| blocks.iter().map(move |&b| (p, b)))
        .collect();
    cells
        .par_iter()
        .map(|&(p, block)| {
            let (nu1, nu2) = (1, 0);
            let tp = build_torus_problem(p, p_low, block, variant, n, nu1, nu2, LFA_ORDERING)?;
            Ok(spectral_factor(&tp, tol, 7))
        })
        .collect()
}
