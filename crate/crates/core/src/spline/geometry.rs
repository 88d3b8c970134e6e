//! Geometry parametrizations: the identity square and tensor NURBS patches,
//! including the exact quarter-annulus preset.

use crate::error::{Error, Result};

use super::insert::midpoint_insertion_matrix;
use super::{KnotVector, SplineSpace1D, MAX_DEGREE};

/// Map from the parameter square onto the physical domain.
#[derive(Debug, Clone)]
pub enum GeometryMap {
    IdentitySquare,
    Nurbs(NurbsPatch),
}

impl GeometryMap {
    pub fn eval(&self, xi: f64, eta: f64) -> [f64; 2] {
        match self {
            GeometryMap::IdentitySquare => [xi, eta],
            GeometryMap::Nurbs(p) => p.eval(xi, eta),
        }
    }

    /// Jacobian `J[r][c] = dF_r / d(xi, eta)_c`.
    pub fn jacobian(&self, xi: f64, eta: f64) -> [[f64; 2]; 2] {
        match self {
            GeometryMap::IdentitySquare => [[1.0, 0.0], [0.0, 1.0]],
            GeometryMap::Nurbs(p) => p.jacobian(xi, eta),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, GeometryMap::IdentitySquare)
    }

    /// Rational basis value `R_{i,j}(xi, eta)` for a NURBS geometry.
    pub fn nurbs_basis(&self, i: usize, j: usize, xi: f64, eta: f64) -> Result<f64> {
        match self {
            GeometryMap::IdentitySquare => {
                Err(Error::param("identity geometry has no rational basis"))
            }
            GeometryMap::Nurbs(p) => p.basis(i, j, xi, eta),
        }
    }

    /// Exact degree-2 NURBS map of {r^2 <= x^2+y^2 <= R^2, x,y >= 0}.
    /// `xi` runs along the arc from (0, radius) to (radius, 0); `eta` is
    /// radial from r to R.
    pub fn quarter_annulus(r: f64, big_r: f64) -> Result<GeometryMap> {
        if !(r > 0.0 && r < big_r) {
            return Err(Error::param(format!(
                "quarter annulus requires 0 < r < R, got r={r}, R={big_r}"
            )));
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let dirs = [[0.0, 1.0], [1.0, 1.0], [1.0, 0.0]];
        let radii = [r, 0.5 * (r + big_r), big_r];
        let mut ctrl = Vec::with_capacity(9);
        for d in dirs {
            for rho in radii {
                ctrl.push([rho * d[0], rho * d[1]]);
            }
        }
        Ok(GeometryMap::Nurbs(NurbsPatch {
            kv_x: KnotVector::open_uniform(2, 1)?,
            kv_y: KnotVector::open_uniform(2, 1)?,
            wx: vec![1.0, s, 1.0],
            wy: vec![1.0, 1.0, 1.0],
            ctrl,
        }))
    }
}

/// Tensor-product NURBS patch with separable weights
/// `w_{i,j} = wx[i] * wy[j]`; control points are stored x-major
/// (`idx = i * n_y + j`).
#[derive(Debug, Clone)]
pub struct NurbsPatch {
    kv_x: KnotVector,
    kv_y: KnotVector,
    wx: Vec<f64>,
    wy: Vec<f64>,
    ctrl: Vec<[f64; 2]>,
}

impl NurbsPatch {
    pub fn dims(&self) -> (usize, usize) {
        (self.kv_x.num_basis(), self.kv_y.num_basis())
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.wx[i] * self.wy[j]
    }

    pub fn control_point(&self, i: usize, j: usize) -> [f64; 2] {
        self.ctrl[i * self.kv_y.num_basis() + j]
    }

    fn windows(&self, xi: f64, eta: f64) -> (WindowEval, WindowEval) {
        (
            WindowEval::at(&self.kv_x, xi),
            WindowEval::at(&self.kv_y, eta),
        )
    }

    pub fn eval(&self, xi: f64, eta: f64) -> [f64; 2] {
        let (wx, wy) = self.windows(xi, eta);
        let ny = self.kv_y.num_basis();
        let mut g = [0.0f64; 2];
        let mut w = 0.0f64;
        for a in 0..wx.len {
            let i = wx.first + a;
            for b in 0..wy.len {
                let j = wy.first + b;
                let ww = self.weight(i, j) * wx.vals[a] * wy.vals[b];
                let p = self.ctrl[i * ny + j];
                g[0] += ww * p[0];
                g[1] += ww * p[1];
                w += ww;
            }
        }
        [g[0] / w, g[1] / w]
    }

    pub fn jacobian(&self, xi: f64, eta: f64) -> [[f64; 2]; 2] {
        let (wx, wy) = self.windows(xi, eta);
        let ny = self.kv_y.num_basis();
        let mut g = [0.0f64; 2];
        let mut gx = [0.0f64; 2];
        let mut gy = [0.0f64; 2];
        let (mut w, mut w_x, mut w_y) = (0.0f64, 0.0f64, 0.0f64);
        for a in 0..wx.len {
            let i = wx.first + a;
            for b in 0..wy.len {
                let j = wy.first + b;
                let wij = self.weight(i, j);
                let v = wij * wx.vals[a] * wy.vals[b];
                let dx = wij * wx.ders[a] * wy.vals[b];
                let dy = wij * wx.vals[a] * wy.ders[b];
                let p = self.ctrl[i * ny + j];
                for c in 0..2 {
                    g[c] += v * p[c];
                    gx[c] += dx * p[c];
                    gy[c] += dy * p[c];
                }
                w += v;
                w_x += dx;
                w_y += dy;
            }
        }
        let f = [g[0] / w, g[1] / w];
        [
            [(gx[0] - f[0] * w_x) / w, (gy[0] - f[0] * w_y) / w],
            [(gx[1] - f[1] * w_x) / w, (gy[1] - f[1] * w_y) / w],
        ]
    }

    /// `R_{i,j}(xi, eta) = w_{i,j} N_i N_j / W`.
    pub fn basis(&self, i: usize, j: usize, xi: f64, eta: f64) -> Result<f64> {
        let (nx, ny) = self.dims();
        if i >= nx || j >= ny {
            return Err(Error::param(format!("basis index ({i}, {j}) out of range")));
        }
        let (wx, wy) = self.windows(xi, eta);
        let mut den = 0.0;
        for a in 0..wx.len {
            for b in 0..wy.len {
                den += self.weight(wx.first + a, wy.first + b) * wx.vals[a] * wy.vals[b];
            }
        }
        if !(den > 0.0) {
            return Err(Error::geometry(format!(
                "non-positive rational denominator at ({xi}, {eta})"
            )));
        }
        let ni = self.kv_x.eval_basis(i, self.kv_x.degree(), xi)?;
        let nj = self.kv_y.eval_basis(j, self.kv_y.degree(), eta)?;
        Ok(self.weight(i, j) * ni * nj / den)
    }

    /// Dyadic h-refinement by knot insertion on the weighted control points;
    /// the refined patch parametrizes the same surface exactly.
    pub fn refined(&self, mx: usize, my: usize) -> Result<NurbsPatch> {
        let mut out = self.clone();
        while out.kv_x.subintervals() < mx {
            out = out.refine_x()?;
        }
        while out.kv_y.subintervals() < my {
            out = out.refine_y()?;
        }
        if out.kv_x.subintervals() != mx || out.kv_y.subintervals() != my {
            return Err(Error::param(format!(
                "target mesh ({mx}, {my}) is not a dyadic refinement of ({}, {})",
                self.kv_x.subintervals(),
                self.kv_y.subintervals()
            )));
        }
        Ok(out)
    }

    fn refine_x(&self) -> Result<NurbsPatch> {
        let (fine, op) = midpoint_insertion_matrix(&self.kv_x);
        let (_, ny) = self.dims();
        let nxf = fine.num_basis();
        // Transform x-weighted control points row-wise.
        let mut ctrl = vec![[0.0f64; 2]; nxf * ny];
        let mut wx = vec![0.0f64; nxf];
        for r in 0..nxf {
            let (cols, vals) = op.row(r);
            for (&i, &v) in cols.iter().zip(vals) {
                wx[r] += v * self.wx[i];
                for j in 0..ny {
                    let p = self.ctrl[i * ny + j];
                    ctrl[r * ny + j][0] += v * self.wx[i] * p[0];
                    ctrl[r * ny + j][1] += v * self.wx[i] * p[1];
                }
            }
        }
        for r in 0..nxf {
            for j in 0..ny {
                ctrl[r * ny + j][0] /= wx[r];
                ctrl[r * ny + j][1] /= wx[r];
            }
        }
        Ok(NurbsPatch {
            kv_x: fine,
            kv_y: self.kv_y.clone(),
            wx,
            wy: self.wy.clone(),
            ctrl,
        })
    }

    fn refine_y(&self) -> Result<NurbsPatch> {
        let (fine, op) = midpoint_insertion_matrix(&self.kv_y);
        let (nx, ny) = self.dims();
        let nyf = fine.num_basis();
        let mut ctrl = vec![[0.0f64; 2]; nx * nyf];
        let mut wy = vec![0.0f64; nyf];
        for r in 0..nyf {
            let (cols, vals) = op.row(r);
            for (&j, &v) in cols.iter().zip(vals) {
                wy[r] += v * self.wy[j];
                for i in 0..nx {
                    let p = self.ctrl[i * ny + j];
                    ctrl[i * nyf + r][0] += v * self.wy[j] * p[0];
                    ctrl[i * nyf + r][1] += v * self.wy[j] * p[1];
                }
            }
        }
        for i in 0..nx {
            for r in 0..nyf {
                ctrl[i * nyf + r][0] /= wy[r];
                ctrl[i * nyf + r][1] /= wy[r];
            }
        }
        Ok(NurbsPatch {
            kv_x: self.kv_x.clone(),
            kv_y: fine,
            wx: self.wx.clone(),
            wy,
            ctrl,
        })
    }

    /// Rational weights that represent this patch's univariate weight
    /// function exactly in the degree-`p`, `m`-subinterval field space.
    /// Returns `None` when that direction's weights are constant.
    pub fn field_weights(&self, axis: Axis, p: usize, m: usize) -> Result<Option<Vec<f64>>> {
        let (kv, w) = match axis {
            Axis::X => (&self.kv_x, &self.wx),
            Axis::Y => (&self.kv_y, &self.wy),
        };
        let first = w[0];
        if w.iter().all(|&v| (v - first).abs() < 1e-15) {
            return Ok(None);
        }
        if kv.degree() != 2 || kv.subintervals() != 1 {
            return Err(Error::param(
                "field weight elevation expects a single-element quadratic weight direction",
            ));
        }
        // Bernstein (w0, w1, w2) -> a xi^2 + b xi + c.
        let (w0, w1, w2) = (w[0], w[1], w[2]);
        let a = w0 - 2.0 * w1 + w2;
        let b = 2.0 * (w1 - w0);
        let c = w0;
        if p < 2 {
            return Err(Error::param(
                "a quadratic weight function needs field degree >= 2",
            ));
        }
        let target = KnotVector::open_uniform(p, m)?;
        let t = target.knots();
        let nb = target.num_basis();
        let mut coeffs = Vec::with_capacity(nb);
        // Polar form of the quadratic over each window of p consecutive knots.
        let pairs = (p * (p - 1) / 2) as f64;
        for i in 0..nb {
            let win = &t[i + 1..i + p + 1];
            let e1: f64 = win.iter().sum();
            let mut e2 = 0.0;
            for s in 0..win.len() {
                for q in s + 1..win.len() {
                    e2 += win[s] * win[q];
                }
            }
            coeffs.push(a * e2 / pairs + b * e1 / p as f64 + c);
        }
        if coeffs.iter().any(|&v| v <= 0.0) {
            return Err(Error::geometry("elevated field weights must stay positive"));
        }
        Ok(Some(coeffs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Builds the field space for one direction of a geometry: rational when the
/// geometry carries a non-constant weight in that direction.
pub fn field_space_1d(
    geom: &GeometryMap,
    axis: Axis,
    p: usize,
    m: usize,
    constrained: bool,
) -> Result<SplineSpace1D> {
    match geom {
        GeometryMap::IdentitySquare => SplineSpace1D::bspline(p, m, constrained),
        GeometryMap::Nurbs(patch) => match patch.field_weights(axis, p, m)? {
            None => SplineSpace1D::bspline(p, m, constrained),
            Some(w) => SplineSpace1D::rational(p, m, constrained, w),
        },
    }
}

struct WindowEval {
    first: usize,
    len: usize,
    vals: [f64; MAX_DEGREE + 1],
    ders: [f64; MAX_DEGREE + 1],
}

impl WindowEval {
    fn at(kv: &KnotVector, xi: f64) -> Self {
        let (span, range) = kv.nonzero_span(xi);
        let mut w = WindowEval {
            first: range.start,
            len: kv.degree() + 1,
            vals: [0.0; MAX_DEGREE + 1],
            ders: [0.0; MAX_DEGREE + 1],
        };
        kv.eval_nonzero_with_derivs(span, xi, &mut w.vals, &mut w.ders);
        w
    }
}
