//! Galerkin assembly of stiffness, mass (including cross-degree) and load
//! vectors over a geometry map, with homogeneous Dirichlet constraints
//! applied by omitting the boundary basis functions.
//!
//! On the identity square the tensor structure is exploited: 2D operators
//! are Kronecker combinations of 1D ones. On a NURBS geometry a knot-span
//! element loop integrates the pulled-back forms with Gauss quadrature.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::sparse::SparseOperator;
use crate::spline::geometry::GeometryMap;
use crate::spline::{SplineSpace1D, SplineSpace2D};

/// Elements processed per parallel batch of local matrices.
const CHUNK: usize = 256;

/// Quadrature points per knot span and direction: p + 1 is exact for every
/// polynomial integrand of the forms assembled here; rational integrands on
/// a NURBS geometry get two extra points, which keeps entries stable to
/// better than 1e-8 under order doubling.
fn default_order(deg: usize, geom: &GeometryMap) -> usize {
    if geom.is_identity() {
        deg + 1
    } else {
        deg + 3
    }
}

// ---------------------------------------------------------------------------
// per-direction evaluation tables

struct DirTables {
    p: usize,
    m: usize,
    nq: usize,
    /// First full basis index of the window on each span.
    first: Vec<usize>,
    /// vals[(s*nq + q)*(p+1) + a]
    vals: Vec<f64>,
    ders: Vec<f64>,
    pts: Vec<f64>,
    wts: Vec<f64>,
}

impl DirTables {
    fn build(space: &SplineSpace1D, nq: usize) -> Self {
        let p = space.degree();
        let m = space.subintervals();
        let rule = GaussRule::new(nq);
        let h = space.kv().h();
        let mut t = DirTables {
            p,
            m,
            nq,
            first: vec![0; m],
            vals: vec![0.0; m * nq * (p + 1)],
            ders: vec![0.0; m * nq * (p + 1)],
            pts: vec![0.0; m * nq],
            wts: vec![0.0; m * nq],
        };
        for s in 0..m {
            for (q, (x, w)) in rule.mapped(s as f64 * h, (s + 1) as f64 * h).enumerate() {
                let win = space.eval_window(x);
                t.first[s] = win.first;
                let base = (s * nq + q) * (p + 1);
                t.vals[base..base + p + 1].copy_from_slice(&win.vals[..p + 1]);
                t.ders[base..base + p + 1].copy_from_slice(&win.ders[..p + 1]);
                t.pts[s * nq + q] = x;
                t.wts[s * nq + q] = w;
            }
        }
        t
    }

    #[inline]
    fn window(&self, s: usize, q: usize) -> (usize, &[f64], &[f64]) {
        let base = (s * self.nq + q) * (self.p + 1);
        (
            self.first[s],
            &self.vals[base..base + self.p + 1],
            &self.ders[base..base + self.p + 1],
        )
    }
}

// ---------------------------------------------------------------------------
// band-pattern CSR scaffolding for the element loop

/// Tensor-band sparsity: row (ix, iy) couples to columns with
/// `jx in [ix - row_deg, ix + col_deg]` per direction (in full indices; the
/// same offsets hold after the constrained shift).
struct BandPattern2D {
    ny_row: usize,
    nx_col: usize,
    ny_col: usize,
    lo: usize,
    hi: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl BandPattern2D {
    fn build(
        (nx_row, ny_row): (usize, usize),
        (nx_col, ny_col): (usize, usize),
        row_deg: usize,
        col_deg: usize,
    ) -> Self {
        let (lo, hi) = (row_deg, col_deg);
        let mut row_ptr = Vec::with_capacity(nx_row * ny_row + 1);
        row_ptr.push(0usize);
        let mut col_idx = Vec::new();
        for ix in 0..nx_row {
            let (xl, xh) = (ix.saturating_sub(lo), (ix + hi).min(nx_col - 1));
            for iy in 0..ny_row {
                let (yl, yh) = (iy.saturating_sub(lo), (iy + hi).min(ny_col - 1));
                for jx in xl..=xh {
                    for jy in yl..=yh {
                        col_idx.push(jx * ny_col + jy);
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        BandPattern2D {
            ny_row,
            nx_col,
            ny_col,
            lo,
            hi,
            row_ptr,
            col_idx,
        }
    }

    #[inline]
    fn pos(&self, ix: usize, iy: usize, jx: usize, jy: usize) -> usize {
        let (xl, xh) = (ix.saturating_sub(self.lo), (ix + self.hi).min(self.nx_col - 1));
        let yl = iy.saturating_sub(self.lo);
        let yh = (iy + self.hi).min(self.ny_col - 1);
        debug_assert!((xl..=xh).contains(&jx) && (yl..=yh).contains(&jy));
        self.row_ptr[ix * self.ny_row + iy] + (jx - xl) * (yh - yl + 1) + (jy - yl)
    }

    fn into_operator(self, nrows: usize, ncols: usize, values: Vec<f64>) -> SparseOperator {
        SparseOperator::from_csr_parts(nrows, ncols, self.row_ptr, self.col_idx, values)
    }
}

// ---------------------------------------------------------------------------
// 1D assembly (identity line geometry)

pub fn assemble_stiffness_1d(space: &SplineSpace1D) -> Result<SparseOperator> {
    if space.degree() == 0 {
        return Err(Error::param("stiffness requires degree >= 1"));
    }
    stiffness_1d_with_order(space, space.degree() + 1)
}

/// Cross mass between two spaces on the same mesh (row degree <= col degree
/// yields the transfer-operator orientation; equal spaces give the standard
/// mass matrix).
pub fn assemble_mass_1d(row: &SplineSpace1D, col: &SplineSpace1D) -> Result<SparseOperator> {
    if row.subintervals() != col.subintervals() {
        return Err(Error::param(format!(
            "mass assembly needs matching meshes, got {} vs {}",
            row.subintervals(),
            col.subintervals()
        )));
    }
    mass_1d_with_order(row, col, row.degree().max(col.degree()) + 1)
}

// ---------------------------------------------------------------------------
// 2D assembly

pub fn assemble_stiffness(space: &SplineSpace2D, geom: &GeometryMap) -> Result<SparseOperator> {
    assemble_stiffness_with_order(space, geom, default_order(space.x.degree().max(space.y.degree()), geom))
}

pub fn assemble_stiffness_with_order(
    space: &SplineSpace2D,
    geom: &GeometryMap,
    nq: usize,
) -> Result<SparseOperator> {
    if geom.is_identity() && space.x.weights().is_none() && space.y.weights().is_none() {
        return stiffness_kron(space, nq);
    }
    stiffness_loop(space, geom, nq)
}

/// A = Kx (x) My + Mx (x) Ky on the identity square.
fn stiffness_kron(space: &SplineSpace2D, nq: usize) -> Result<SparseOperator> {
    let kx = stiffness_1d_with_order(&space.x, nq)?;
    let ky = stiffness_1d_with_order(&space.y, nq)?;
    let mx = mass_1d_with_order(&space.x, &space.x, nq)?;
    let my = mass_1d_with_order(&space.y, &space.y, nq)?;
    kron_sum(&kx, &my, &mx, &ky)
}

fn stiffness_1d_with_order(space: &SplineSpace1D, nq: usize) -> Result<SparseOperator> {
    let t = DirTables::build(space, nq);
    let n = space.dim();
    let mut trip = Vec::new();
    for s in 0..t.m {
        for q in 0..t.nq {
            let (first, _, ders) = t.window(s, q);
            let w = t.wts[s * t.nq + q];
            for a in 0..=t.p {
                let Some(i) = space.space_index(first + a) else { continue };
                for b in 0..=t.p {
                    let Some(j) = space.space_index(first + b) else { continue };
                    trip.push((i, j, ders[a] * ders[b] * w));
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(n, n, trip))
}

fn mass_1d_with_order(row: &SplineSpace1D, col: &SplineSpace1D, nq: usize) -> Result<SparseOperator> {
    let tr = DirTables::build(row, nq);
    let tc = DirTables::build(col, nq);
    let mut trip = Vec::new();
    for s in 0..tr.m {
        for q in 0..nq {
            let (fr, vr, _) = tr.window(s, q);
            let (fc, vc, _) = tc.window(s, q);
            let w = tr.wts[s * nq + q];
            for a in 0..=tr.p {
                let Some(i) = row.space_index(fr + a) else { continue };
                for b in 0..=tc.p {
                    let Some(j) = col.space_index(fc + b) else { continue };
                    trip.push((i, j, vr[a] * vc[b] * w));
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(row.dim(), col.dim(), trip))
}

/// C[(ia,ib),(ja,jb)] = A1[ia,ja] B1[ib,jb] + A2[ia,ja] B2[ib,jb], built row
/// by row; A1/A2 and B1/B2 must share their sparsity patterns.
fn kron_sum(
    a1: &SparseOperator,
    b1: &SparseOperator,
    a2: &SparseOperator,
    b2: &SparseOperator,
) -> Result<SparseOperator> {
    let (na, nb) = (a1.nrows(), b1.nrows());
    let (ca, cb) = (a1.ncols(), b1.ncols());
    let mut row_ptr = Vec::with_capacity(na * nb + 1);
    row_ptr.push(0usize);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for ia in 0..na {
        let (acols, avals1) = a1.row(ia);
        let (acols2, avals2) = a2.row(ia);
        if acols != acols2 {
            return Err(Error::numerical("kron_sum pattern mismatch (x factors)"));
        }
        for ib in 0..nb {
            let (bcols, bvals1) = b1.row(ib);
            let (bcols2, bvals2) = b2.row(ib);
            if bcols != bcols2 {
                return Err(Error::numerical("kron_sum pattern mismatch (y factors)"));
            }
            for (k, &ja) in acols.iter().enumerate() {
                for (l, &jb) in bcols.iter().enumerate() {
                    col_idx.push(ja * cb + jb);
                    values.push(avals1[k] * bvals1[l] + avals2[k] * bvals2[l]);
                }
            }
            row_ptr.push(col_idx.len());
        }
    }
    Ok(SparseOperator::from_csr_parts(
        na * nb,
        ca * cb,
        row_ptr,
        col_idx,
        values,
    ))
}

/// General element loop: pullback of the gradient form with Jacobian factors.
fn stiffness_loop(space: &SplineSpace2D, geom: &GeometryMap, nq: usize) -> Result<SparseOperator> {
    let tx = DirTables::build(&space.x, nq);
    let ty = DirTables::build(&space.y, nq);
    let (px, py) = (tx.p, ty.p);
    let nloc = (px + 1) * (py + 1);
    let deg = px.max(py);
    let dims = space.dims();
    let pattern = BandPattern2D::build(dims, dims, deg, deg);
    let mut values = vec![0.0f64; pattern.col_idx.len()];

    let elements: Vec<(usize, usize)> = (0..tx.m)
        .flat_map(|sx| (0..ty.m).map(move |sy| (sx, sy)))
        .collect();
    for chunk in elements.chunks(CHUNK) {
        let locals: Result<Vec<Vec<f64>>> = chunk
            .par_iter()
            .map(|&(sx, sy)| stiffness_local(&tx, &ty, geom, sx, sy, nloc))
            .collect();
        let locals = locals?;
        for (&(sx, sy), loc) in chunk.iter().zip(&locals) {
            scatter_symmetric(space, &pattern, &mut values, &tx, &ty, sx, sy, loc);
        }
    }
    Ok(pattern.into_operator(space.dim(), space.dim(), values))
}

fn stiffness_local(
    tx: &DirTables,
    ty: &DirTables,
    geom: &GeometryMap,
    sx: usize,
    sy: usize,
    nloc: usize,
) -> Result<Vec<f64>> {
    let (px, py) = (tx.p, ty.p);
    let mut loc = vec![0.0f64; nloc * nloc];
    let mut gx = vec![0.0f64; nloc];
    let mut gy = vec![0.0f64; nloc];
    for qx in 0..tx.nq {
        let (_, vx, dx) = tx.window(sx, qx);
        let xi = tx.pts[sx * tx.nq + qx];
        let wx = tx.wts[sx * tx.nq + qx];
        for qy in 0..ty.nq {
            let (_, vy, dy) = ty.window(sy, qy);
            let eta = ty.pts[sy * ty.nq + qy];
            let w = wx * ty.wts[sy * ty.nq + qy];
            let j = geom.jacobian(xi, eta);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det <= 1e-14 {
                return Err(Error::geometry(format!(
                    "non-positive Jacobian determinant {det:.3e} in span ({sx}, {sy})"
                )));
            }
            // C = J^{-1} J^{-T} |det J| * quadrature weight
            let inv = [
                [j[1][1] / det, -j[0][1] / det],
                [-j[1][0] / det, j[0][0] / det],
            ];
            let scale = det * w;
            let c00 = (inv[0][0] * inv[0][0] + inv[0][1] * inv[0][1]) * scale;
            let c01 = (inv[0][0] * inv[1][0] + inv[0][1] * inv[1][1]) * scale;
            let c11 = (inv[1][0] * inv[1][0] + inv[1][1] * inv[1][1]) * scale;
            for ax in 0..=px {
                for ay in 0..=py {
                    let a = ax * (py + 1) + ay;
                    gx[a] = dx[ax] * vy[ay];
                    gy[a] = vx[ax] * dy[ay];
                }
            }
            for a in 0..nloc {
                let (ga0, ga1) = (gx[a], gy[a]);
                let row = &mut loc[a * nloc..(a + 1) * nloc];
                for (b, item) in row.iter_mut().enumerate().skip(a) {
                    *item += ga0 * (c00 * gx[b] + c01 * gy[b]) + ga1 * (c01 * gx[b] + c11 * gy[b]);
                }
            }
        }
    }
    // Mirror the upper triangle for exact symmetry.
    for a in 0..nloc {
        for b in 0..a {
            loc[a * nloc + b] = loc[b * nloc + a];
        }
    }
    Ok(loc)
}

#[allow(clippy::too_many_arguments)]
fn scatter_symmetric(
    space: &SplineSpace2D,
    pattern: &BandPattern2D,
    values: &mut [f64],
    tx: &DirTables,
    ty: &DirTables,
    sx: usize,
    sy: usize,
    loc: &[f64],
) {
    let (px, py) = (tx.p, ty.p);
    let nloc = (px + 1) * (py + 1);
    let (fx, fy) = (tx.first[sx], ty.first[sy]);
    for ax in 0..=px {
        let Some(ix) = space.x.space_index(fx + ax) else { continue };
        for ay in 0..=py {
            let Some(iy) = space.y.space_index(fy + ay) else { continue };
            let a = ax * (py + 1) + ay;
            for bx in 0..=px {
                let Some(jx) = space.x.space_index(fx + bx) else { continue };
                for by in 0..=py {
                    let Some(jy) = space.y.space_index(fy + by) else { continue };
                    let b = bx * (py + 1) + by;
                    values[pattern.pos(ix, iy, jx, jy)] += loc[a * nloc + b];
                }
            }
        }
    }
}

pub fn assemble_mass(
    row_space: &SplineSpace2D,
    col_space: &SplineSpace2D,
    geom: &GeometryMap,
) -> Result<SparseOperator> {
    let deg = row_space
        .x
        .degree()
        .max(col_space.x.degree())
        .max(row_space.y.degree())
        .max(col_space.y.degree());
    assemble_mass_with_order(row_space, col_space, geom, default_order(deg, geom))
}

pub fn assemble_mass_with_order(
    row_space: &SplineSpace2D,
    col_space: &SplineSpace2D,
    geom: &GeometryMap,
    nq: usize,
) -> Result<SparseOperator> {
    if row_space.x.subintervals() != col_space.x.subintervals()
        || row_space.y.subintervals() != col_space.y.subintervals()
    {
        return Err(Error::param("mass assembly needs matching meshes"));
    }
    if row_space.x.degree() > col_space.x.degree() || row_space.y.degree() > col_space.y.degree() {
        return Err(Error::param(
            "cross mass expects row degree <= column degree",
        ));
    }
    let polynomial = row_space.x.weights().is_none()
        && row_space.y.weights().is_none()
        && col_space.x.weights().is_none()
        && col_space.y.weights().is_none();
    if geom.is_identity() && polynomial {
        let mx = mass_1d_with_order(&row_space.x, &col_space.x, nq)?;
        let my = mass_1d_with_order(&row_space.y, &col_space.y, nq)?;
        return Ok(SparseOperator::kron(&mx, &my));
    }
    mass_loop(row_space, col_space, geom, nq)
}

fn mass_loop(
    row_space: &SplineSpace2D,
    col_space: &SplineSpace2D,
    geom: &GeometryMap,
    nq: usize,
) -> Result<SparseOperator> {
    let rx = DirTables::build(&row_space.x, nq);
    let ry = DirTables::build(&row_space.y, nq);
    let cx = DirTables::build(&col_space.x, nq);
    let cy = DirTables::build(&col_space.y, nq);
    let row_deg = rx.p.max(ry.p);
    let col_deg = cx.p.max(cy.p);
    let pattern = BandPattern2D::build(row_space.dims(), col_space.dims(), row_deg, col_deg);
    let mut values = vec![0.0f64; pattern.col_idx.len()];
    let nc = (cx.p + 1) * (cy.p + 1);

    let elements: Vec<(usize, usize)> = (0..rx.m)
        .flat_map(|sx| (0..ry.m).map(move |sy| (sx, sy)))
        .collect();
    for chunk in elements.chunks(CHUNK) {
        let locals: Result<Vec<Vec<f64>>> = chunk
            .par_iter()
            .map(|&(sx, sy)| mass_local(&rx, &ry, &cx, &cy, geom, sx, sy))
            .collect();
        let locals = locals?;
        for (&(sx, sy), loc) in chunk.iter().zip(&locals) {
            let (frx, fry) = (rx.first[sx], ry.first[sy]);
            let (fcx, fcy) = (cx.first[sx], cy.first[sy]);
            for ax in 0..=rx.p {
                let Some(ix) = row_space.x.space_index(frx + ax) else { continue };
                for ay in 0..=ry.p {
                    let Some(iy) = row_space.y.space_index(fry + ay) else { continue };
                    let a = ax * (ry.p + 1) + ay;
                    for bx in 0..=cx.p {
                        let Some(jx) = col_space.x.space_index(fcx + bx) else { continue };
                        for by in 0..=cy.p {
                            let Some(jy) = col_space.y.space_index(fcy + by) else { continue };
                            let b = bx * (cy.p + 1) + by;
                            values[pattern.pos(ix, iy, jx, jy)] += loc[a * nc + b];
                        }
                    }
                }
            }
        }
    }
    Ok(pattern.into_operator(row_space.dim(), col_space.dim(), values))
}

fn mass_local(
    rx: &DirTables,
    ry: &DirTables,
    cx: &DirTables,
    cy: &DirTables,
    geom: &GeometryMap,
    sx: usize,
    sy: usize,
) -> Result<Vec<f64>> {
    let nr = (rx.p + 1) * (ry.p + 1);
    let nc = (cx.p + 1) * (cy.p + 1);
    let mut loc = vec![0.0f64; nr * nc];
    for qx in 0..rx.nq {
        let (_, vrx, _) = rx.window(sx, qx);
        let (_, vcx, _) = cx.window(sx, qx);
        let xi = rx.pts[sx * rx.nq + qx];
        let wx = rx.wts[sx * rx.nq + qx];
        for qy in 0..ry.nq {
            let (_, vry, _) = ry.window(sy, qy);
            let (_, vcy, _) = cy.window(sy, qy);
            let eta = ry.pts[sy * ry.nq + qy];
            let w = wx * ry.wts[sy * ry.nq + qy];
            let j = geom.jacobian(xi, eta);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det <= 1e-14 {
                return Err(Error::geometry(format!(
                    "non-positive Jacobian determinant {det:.3e} in span ({sx}, {sy})"
                )));
            }
            let scale = det * w;
            for ax in 0..=rx.p {
                for ay in 0..=ry.p {
                    let a = ax * (ry.p + 1) + ay;
                    let va = vrx[ax] * vry[ay] * scale;
                    if va == 0.0 {
                        continue;
                    }
                    let row = &mut loc[a * nc..(a + 1) * nc];
                    for bx in 0..=cx.p {
                        for by in 0..=cy.p {
                            row[bx * (cy.p + 1) + by] += va * vcx[bx] * vcy[by];
                        }
                    }
                }
            }
        }
    }
    Ok(loc)
}

/// Load vector (f, phi_i) over the given space; length is the space
/// dimension (full when unconstrained).
pub fn assemble_load<F>(space: &SplineSpace2D, geom: &GeometryMap, f: F) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> f64,
{
    let nq = default_order(space.x.degree().max(space.y.degree()), geom);
    let tx = DirTables::build(&space.x, nq);
    let ty = DirTables::build(&space.y, nq);
    let mut out = vec![0.0f64; space.dim()];
    for sx in 0..tx.m {
        for sy in 0..ty.m {
            for qx in 0..nq {
                let (fx, vx, _) = tx.window(sx, qx);
                let xi = tx.pts[sx * nq + qx];
                let wx = tx.wts[sx * nq + qx];
                for qy in 0..nq {
                    let (fy, vy, _) = ty.window(sy, qy);
                    let eta = ty.pts[sy * nq + qy];
                    let w = wx * ty.wts[sy * nq + qy];
                    let jm = geom.jacobian(xi, eta);
                    let det = jm[0][0] * jm[1][1] - jm[0][1] * jm[1][0];
                    if det <= 1e-14 {
                        return Err(Error::geometry(format!(
                            "non-positive Jacobian determinant {det:.3e} in span ({sx}, {sy})"
                        )));
                    }
                    let phys = geom.eval(xi, eta);
                    let fv = f(phys[0], phys[1]) * det * w;
                    for ax in 0..=tx.p {
                        let Some(ix) = space.x.space_index(fx + ax) else { continue };
                        for ay in 0..=ty.p {
                            let Some(iy) = space.y.space_index(fy + ay) else { continue };
                            out[space.global(ix, iy)] += vx[ax] * vy[ay] * fv;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Field value at a parameter point from a coefficient vector (constrained
/// boundary coefficients are implicitly zero).
pub fn eval_field(space: &SplineSpace2D, coeffs: &[f64], xi: f64, eta: f64) -> f64 {
    let wx = space.x.eval_window(xi);
    let wy = space.y.eval_window(eta);
    let mut acc = 0.0;
    for a in 0..wx.len {
        let Some(ix) = space.x.space_index(wx.first + a) else { continue };
        for b in 0..wy.len {
            let Some(iy) = space.y.space_index(wy.first + b) else { continue };
            acc += coeffs[space.global(ix, iy)] * wx.vals[a] * wy.vals[b];
        }
    }
    acc
}

/// L2 norm of (u_h - u_exact) over the physical domain.
pub fn l2_error<F>(space: &SplineSpace2D, geom: &GeometryMap, coeffs: &[f64], exact: F) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let nq = default_order(space.x.degree().max(space.y.degree()), geom) + 1;
    let tx = DirTables::build(&space.x, nq);
    let ty = DirTables::build(&space.y, nq);
    let mut acc = 0.0f64;
    for sx in 0..tx.m {
        for sy in 0..ty.m {
            for qx in 0..nq {
                let (fx, vx, _) = tx.window(sx, qx);
                let xi = tx.pts[sx * nq + qx];
                let wx = tx.wts[sx * nq + qx];
                for qy in 0..nq {
                    let (fy, vy, _) = ty.window(sy, qy);
                    let eta = ty.pts[sy * nq + qy];
                    let w = wx * ty.wts[sy * nq + qy];
                    let jm = geom.jacobian(xi, eta);
                    let det = jm[0][0] * jm[1][1] - jm[0][1] * jm[1][0];
                    let mut uh = 0.0;
                    for ax in 0..=tx.p {
                        let Some(ix) = space.x.space_index(fx + ax) else { continue };
                        for ay in 0..=ty.p {
                            let Some(iy) = space.y.space_index(fy + ay) else { continue };
                            uh += coeffs[space.global(ix, iy)] * vx[ax] * vy[ay];
                        }
                    }
                    let phys = geom.eval(xi, eta);
                    let diff = uh - exact(phys[0], phys[1]);
                    acc += diff * diff * det * w;
                }
            }
        }
    }
    Ok(acc.sqrt())
}
