//! The two benchmark problems: Poisson on the unit square and on a quarter
//! annulus, each with a known exact solution.

use crate::error::Result;
use crate::spline::geometry::GeometryMap;

pub const ANNULUS_INNER: f64 = 0.3;
pub const ANNULUS_OUTER: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Square,
    Annulus,
}

impl Preset {
    pub fn geometry(self) -> Result<GeometryMap> {
        match self {
            Preset::Square => Ok(GeometryMap::IdentitySquare),
            Preset::Annulus => GeometryMap::quarter_annulus(ANNULUS_INNER, ANNULUS_OUTER),
        }
    }

    /// Coarse-level degree dictated by the geometry: linear on the square,
    /// quadratic on the annulus (the weight function is quadratic).
    pub fn p_low(self) -> usize {
        match self {
            Preset::Square => 1,
            Preset::Annulus => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Square => "square",
            Preset::Annulus => "annulus",
        }
    }

    pub fn exact(self) -> fn(f64, f64) -> f64 {
        match self {
            Preset::Square => square_exact,
            Preset::Annulus => annulus_exact,
        }
    }

    pub fn rhs(self) -> fn(f64, f64) -> f64 {
        match self {
            Preset::Square => square_rhs,
            Preset::Annulus => annulus_rhs,
        }
    }
}

/// u = sin(pi x) sin(pi y).
pub fn square_exact(x: f64, y: f64) -> f64 {
    let pi = std::f64::consts::PI;
    (pi * x).sin() * (pi * y).sin()
}

/// f = -lap u = 2 pi^2 sin(pi x) sin(pi y).
pub fn square_rhs(x: f64, y: f64) -> f64 {
    2.0 * std::f64::consts::PI.powi(2) * square_exact(x, y)
}

/// u = sin(pi x) sin(pi y) (x^2 + y^2 - r^2)(x^2 + y^2 - R^2); vanishes on
/// both arcs and on the axes.
pub fn annulus_exact(x: f64, y: f64) -> f64 {
    let q = x * x + y * y;
    square_exact(x, y) * (q - ANNULUS_INNER * ANNULUS_INNER) * (q - ANNULUS_OUTER * ANNULUS_OUTER)
}

/// f = -lap u for `annulus_exact`, expanded with
/// g(q) = (q - r^2)(q - R^2):
/// -lap u = 2 pi^2 s g - 2 grad(s) . grad(g) - s (16 q - 4(r^2 + R^2)).
pub fn annulus_rhs(x: f64, y: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let (r2, rr2) = (
        ANNULUS_INNER * ANNULUS_INNER,
        ANNULUS_OUTER * ANNULUS_OUTER,
    );
    let q = x * x + y * y;
    let s = (pi * x).sin() * (pi * y).sin();
    let g = (q - r2) * (q - rr2);
    let g_prime = 2.0 * q - r2 - rr2;
    let grad_dot = 2.0 * pi * g_prime
        * (x * (pi * x).cos() * (pi * y).sin() + y * (pi * x).sin() * (pi * y).cos());
    2.0 * pi * pi * s * g - 2.0 * grad_dot - s * (16.0 * q - 4.0 * (r2 + rr2))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Five-point finite-difference Laplacian as an independent check of the
    /// hand-derived right-hand sides.
    fn fd_neg_laplacian(u: fn(f64, f64) -> f64, x: f64, y: f64) -> f64 {
        let h = 1e-4;
        -(u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4.0 * u(x, y)) / (h * h)
    }

    #[test]
    fn square_rhs_matches_finite_differences() {
        for &(x, y) in &[(0.3, 0.7), (0.51, 0.22), (0.85, 0.4)] {
            let fd = fd_neg_laplacian(square_exact, x, y);
            assert!((square_rhs(x, y) - fd).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn annulus_rhs_matches_finite_differences() {
        for &(x, y) in &[(0.25, 0.25), (0.1, 0.4), (0.33, 0.2), (0.05, 0.45)] {
            let fd = fd_neg_laplacian(annulus_exact, x, y);
            assert!(
                (annulus_rhs(x, y) - fd).abs() < 1e-5 * (1.0 + fd.abs()),
                "at ({x}, {y}): {} vs {fd}",
                annulus_rhs(x, y)
            );
        }
    }

    #[test]
    fn annulus_exact_vanishes_on_boundary() {
        for t in 0..=10 {
            let a = t as f64 / 10.0 * std::f64::consts::FRAC_PI_2;
            for r in [ANNULUS_INNER, ANNULUS_OUTER] {
                assert!(annulus_exact(r * a.cos(), r * a.sin()).abs() < 1e-14);
            }
            let rad = ANNULUS_INNER + t as f64 / 10.0 * (ANNULUS_OUTER - ANNULUS_INNER);
            assert!(annulus_exact(rad, 0.0).abs() < 1e-14);
            assert!(annulus_exact(0.0, rad).abs() < 1e-14);
        }
    }
}
