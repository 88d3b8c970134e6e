//! Univariate and tensor-product spline spaces: open uniform knot vectors,
//! Cox-de Boor evaluation, derivatives, and optional rational weights.

pub mod geometry;
pub mod insert;

use crate::error::{Error, Result};

/// Highest spline degree the fixed-size evaluation buffers accommodate.
pub const MAX_DEGREE: usize = 11;

/// Open uniform knot vector on [0, 1]: the first and last knot repeat
/// `p + 1` times and the `m - 1` interior knots are `i/m`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    subintervals: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    pub fn open_uniform(p: usize, m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::param(format!("subinterval count must be >= 1, got {m}")));
        }
        if p > MAX_DEGREE {
            return Err(Error::param(format!(
                "degree {p} exceeds the supported maximum {MAX_DEGREE}"
            )));
        }
        let mut knots = Vec::with_capacity(2 * p + m + 1);
        knots.extend(std::iter::repeat(0.0).take(p + 1));
        for i in 1..m {
            knots.push(i as f64 / m as f64);
        }
        knots.extend(std::iter::repeat(1.0).take(p + 1));
        Ok(KnotVector {
            degree: p,
            subintervals: m,
            knots,
        })
    }

    /// Builds from an explicit non-decreasing knot sequence (used by the
    /// refinement machinery). `subintervals` counts nonempty spans.
    pub(crate) fn from_knots(degree: usize, knots: Vec<f64>) -> Self {
        let subintervals = knots.windows(2).filter(|w| w[1] > w[0]).count();
        KnotVector {
            degree,
            subintervals,
            knots,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn subintervals(&self) -> usize {
        self.subintervals
    }

    pub fn h(&self) -> f64 {
        1.0 / self.subintervals as f64
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of degree-`p` basis functions: m + p.
    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Number of basis functions at a reduced degree `k <= p` over the same
    /// knots: m + 2p - k.
    pub fn num_basis_of_degree(&self, k: usize) -> usize {
        self.knots.len() - k - 1
    }

    /// Index of the knot span containing `xi`, clamped so that `xi = 1`
    /// falls in the last nonempty span (closed right endpoint).
    pub fn find_span(&self, xi: f64) -> usize {
        let p = self.degree;
        let last = self.knots.len() - p - 2; // last nonempty span start
        if xi >= self.knots[last + 1] {
            return last;
        }
        if xi <= self.knots[p] {
            return p;
        }
        let (mut lo, mut hi) = (p, last + 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if xi < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Span index and the range of the `p + 1` basis functions that may be
    /// nonzero at `xi`.
    pub fn nonzero_span(&self, xi: f64) -> (usize, std::ops::Range<usize>) {
        let s = self.find_span(xi);
        (s, s - self.degree..s + 1)
    }

    /// Single basis function `N_i^k(xi)` by the Cox-de Boor recursion;
    /// fractions 0/0 count as zero. `i` is 0-based.
    pub fn eval_basis(&self, i: usize, k: usize, xi: f64) -> Result<f64> {
        if k > self.degree {
            return Err(Error::param(format!(
                "degree {k} exceeds knot vector degree {}",
                self.degree
            )));
        }
        if i >= self.num_basis_of_degree(k) {
            return Err(Error::param(format!(
                "basis index {i} out of range for degree {k} ({} functions)",
                self.num_basis_of_degree(k)
            )));
        }
        Ok(self.cox_de_boor(i, k, xi))
    }

    fn cox_de_boor(&self, i: usize, k: usize, xi: f64) -> f64 {
        let t = &self.knots;
        if k == 0 {
            let inside = t[i] <= xi && xi < t[i + 1];
            let at_right_end = xi >= 1.0 && t[i] < t[i + 1] && t[i + 1] >= 1.0;
            return if inside || at_right_end { 1.0 } else { 0.0 };
        }
        let mut value = 0.0;
        let d1 = t[i + k] - t[i];
        if d1 > 0.0 {
            value += (xi - t[i]) / d1 * self.cox_de_boor(i, k - 1, xi);
        }
        let d2 = t[i + k + 1] - t[i + 1];
        if d2 > 0.0 {
            value += (t[i + k + 1] - xi) / d2 * self.cox_de_boor(i + 1, k - 1, xi);
        }
        value
    }

    /// d/dxi of `N_i^p` through the degree-reduction rule.
    pub fn eval_basis_derivative(&self, i: usize, xi: f64) -> Result<f64> {
        let p = self.degree;
        if p == 0 {
            return Err(Error::param("derivative undefined for degree 0"));
        }
        if i >= self.num_basis() {
            return Err(Error::param(format!("basis index {i} out of range")));
        }
        let t = &self.knots;
        let mut value = 0.0;
        let d1 = t[i + p] - t[i];
        if d1 > 0.0 {
            value += p as f64 / d1 * self.cox_de_boor(i, p - 1, xi);
        }
        let d2 = t[i + p + 1] - t[i + 1];
        if d2 > 0.0 {
            value -= p as f64 / d2 * self.cox_de_boor(i + 1, p - 1, xi);
        }
        Ok(value)
    }

    /// Values of the `p + 1` basis functions that are nonzero on `span`,
    /// for indices `span - p ..= span`.
    pub fn eval_nonzero(&self, span: usize, xi: f64, vals: &mut [f64]) {
        let p = self.degree;
        debug_assert!(vals.len() >= p + 1);
        let t = &self.knots;
        let mut left = [0.0f64; MAX_DEGREE + 1];
        let mut right = [0.0f64; MAX_DEGREE + 1];
        vals[0] = 1.0;
        for j in 1..=p {
            left[j] = xi - t[span + 1 - j];
            right[j] = t[span + j] - xi;
            let mut saved = 0.0;
            for r in 0..j {
                let tmp = vals[r] / (right[r + 1] + left[j - r]);
                vals[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            vals[j] = saved;
        }
    }

    /// Values and first derivatives of the nonzero basis functions on `span`.
    pub fn eval_nonzero_with_derivs(&self, span: usize, xi: f64, vals: &mut [f64], ders: &mut [f64]) {
        let p = self.degree;
        debug_assert!(vals.len() >= p + 1 && ders.len() >= p + 1);
        if p == 0 {
            vals[0] = 1.0;
            ders[0] = 0.0;
            return;
        }
        let t = &self.knots;
        // Degree p-1 row, then the derivative combination, then finish to p.
        let mut low = [0.0f64; MAX_DEGREE + 1];
        let mut left = [0.0f64; MAX_DEGREE + 1];
        let mut right = [0.0f64; MAX_DEGREE + 1];
        low[0] = 1.0;
        for j in 1..p {
            left[j] = xi - t[span + 1 - j];
            right[j] = t[span + j] - xi;
            let mut saved = 0.0;
            for r in 0..j {
                let tmp = low[r] / (right[r + 1] + left[j - r]);
                low[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            low[j] = saved;
        }
        let pf = p as f64;
        for j in 0..=p {
            let i = span - p + j; // global index of the degree-p function
            let mut d = 0.0;
            if j >= 1 {
                let den = t[i + p] - t[i];
                if den > 0.0 {
                    d += pf / den * low[j - 1];
                }
            }
            if j <= p - 1 {
                let den = t[i + p + 1] - t[i + 1];
                if den > 0.0 {
                    d -= pf / den * low[j];
                }
            }
            ders[j] = d;
        }
        // Last triangle row for the values.
        vals[..p].copy_from_slice(&low[..p]);
        left[p] = xi - t[span + 1 - p];
        right[p] = t[span + p] - xi;
        let mut saved = 0.0;
        for r in 0..p {
            let tmp = vals[r] / (right[r + 1] + left[p - r]);
            vals[r] = saved + right[r + 1] * tmp;
            saved = left[p - r] * tmp;
        }
        vals[p] = saved;
    }
}

/// Values (and derivatives) of the nonzero field basis functions at one
/// parameter point, with `first` the 0-based full index of the first one.
#[derive(Debug, Clone, Copy)]
pub struct BasisWindow {
    pub first: usize,
    pub len: usize,
    pub vals: [f64; MAX_DEGREE + 1],
    pub ders: [f64; MAX_DEGREE + 1],
}

/// Univariate spline space over an open uniform knot vector. `constrained`
/// drops the first and last basis functions (homogeneous Dirichlet trace).
/// Rational spaces carry one positive weight per full basis function.
#[derive(Debug, Clone)]
pub struct SplineSpace1D {
    kv: KnotVector,
    constrained: bool,
    weights: Option<Vec<f64>>,
}

impl SplineSpace1D {
    pub fn bspline(p: usize, m: usize, constrained: bool) -> Result<Self> {
        Ok(SplineSpace1D {
            kv: KnotVector::open_uniform(p, m)?,
            constrained,
            weights: None,
        })
    }

    pub fn rational(p: usize, m: usize, constrained: bool, weights: Vec<f64>) -> Result<Self> {
        let kv = KnotVector::open_uniform(p, m)?;
        if weights.len() != kv.num_basis() {
            return Err(Error::param(format!(
                "expected {} weights, got {}",
                kv.num_basis(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::geometry("rational weights must be strictly positive"));
        }
        Ok(SplineSpace1D {
            kv,
            constrained,
            weights: Some(weights),
        })
    }

    pub fn kv(&self) -> &KnotVector {
        &self.kv
    }

    pub fn degree(&self) -> usize {
        self.kv.degree()
    }

    pub fn subintervals(&self) -> usize {
        self.kv.subintervals()
    }

    pub fn constrained(&self) -> bool {
        self.constrained
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Space dimension: m + p full, m + p - 2 constrained.
    pub fn dim(&self) -> usize {
        self.kv.num_basis() - if self.constrained { 2 } else { 0 }
    }

    /// Maps a space index to the full basis index.
    pub fn full_index(&self, g: usize) -> usize {
        g + usize::from(self.constrained)
    }

    /// Maps a full basis index to the space index, when the function belongs
    /// to the space.
    pub fn space_index(&self, full: usize) -> Option<usize> {
        if self.constrained {
            if full == 0 || full + 1 == self.kv.num_basis() {
                None
            } else {
                Some(full - 1)
            }
        } else {
            Some(full)
        }
    }

    /// Same knots and weights, opposite constraint flag.
    pub fn with_constrained(&self, constrained: bool) -> Self {
        SplineSpace1D {
            kv: self.kv.clone(),
            constrained,
            weights: self.weights.clone(),
        }
    }

    /// Field basis values/derivatives at `xi`; applies the rational
    /// transform when the space has weights.
    pub fn eval_window(&self, xi: f64) -> BasisWindow {
        let p = self.degree();
        let (span, range) = self.kv.nonzero_span(xi);
        let mut w = BasisWindow {
            first: range.start,
            len: p + 1,
            vals: [0.0; MAX_DEGREE + 1],
            ders: [0.0; MAX_DEGREE + 1],
        };
        self.kv
            .eval_nonzero_with_derivs(span, xi, &mut w.vals, &mut w.ders);
        if let Some(weights) = &self.weights {
            // Basis functions outside the window vanish at xi, so the window
            // sums give the full weight function W and its derivative.
            let mut den = 0.0;
            let mut dden = 0.0;
            for a in 0..w.len {
                let wa = weights[w.first + a];
                den += wa * w.vals[a];
                dden += wa * w.ders[a];
            }
            for a in 0..w.len {
                let wa = weights[w.first + a];
                let v = w.vals[a];
                let d = w.ders[a];
                w.vals[a] = wa * v / den;
                w.ders[a] = wa * (d * den - v * dden) / (den * den);
            }
        }
        w
    }
}

/// Tensor-product space; global index layout is `ix * dim_y + iy`.
#[derive(Debug, Clone)]
pub struct SplineSpace2D {
    pub x: SplineSpace1D,
    pub y: SplineSpace1D,
}

impl SplineSpace2D {
    pub fn tensor(x: SplineSpace1D, y: SplineSpace1D) -> Self {
        SplineSpace2D { x, y }
    }

    pub fn bspline(p: usize, m: usize, constrained: bool) -> Result<Self> {
        Ok(SplineSpace2D {
            x: SplineSpace1D::bspline(p, m, constrained)?,
            y: SplineSpace1D::bspline(p, m, constrained)?,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x.dim(), self.y.dim())
    }

    pub fn dim(&self) -> usize {
        self.x.dim() * self.y.dim()
    }

    pub fn global(&self, ix: usize, iy: usize) -> usize {
        ix * self.y.dim() + iy
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn open_uniform_p2_m4() {
        let kv = KnotVector::open_uniform(2, 4).unwrap();
        let expected = [0.0, 0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0, 1.0];
        assert_eq!(kv.knots().len(), expected.len());
        for (a, b) in kv.knots().iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn open_uniform_p1_m2() {
        let kv = KnotVector::open_uniform(1, 2).unwrap();
        assert_eq!(kv.knots(), &[0.0, 0.0, 0.5, 1.0, 1.0]);
    }

    #[test]
    fn open_uniform_length_formula() {
        let kv = KnotVector::open_uniform(3, 8).unwrap();
        assert_eq!(kv.knots().len(), 2 * 3 + 8 + 1);
        assert_eq!(kv.num_basis(), 11);
    }

    #[test]
    fn degree_zero_is_step_function() {
        let kv = KnotVector::open_uniform(2, 4).unwrap();
        // Span [0.25, 0.5) belongs to knot index 3.
        assert_eq!(kv.eval_basis(3, 0, 0.3).unwrap(), 1.0);
        assert_eq!(kv.eval_basis(3, 0, 0.6).unwrap(), 0.0);
        assert_eq!(kv.eval_basis(3, 0, 0.25).unwrap(), 1.0);
        assert_eq!(kv.eval_basis(3, 0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn hat_peak_at_half() {
        // p = 1, m = 2: the middle function peaks at 0.5.
        let kv = KnotVector::open_uniform(1, 2).unwrap();
        assert!((kv.eval_basis(1, 1, 0.5).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rightmost_basis_is_one_at_right_end() {
        for p in 1..=4 {
            let kv = KnotVector::open_uniform(p, 5).unwrap();
            let last = kv.num_basis() - 1;
            assert!((kv.eval_basis(last, p, 1.0).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn nonzero_span_examples() {
        let kv = KnotVector::open_uniform(2, 4).unwrap();
        let (span, range) = kv.nonzero_span(0.3);
        assert_eq!(span, 3); // [0.25, 0.5)
        assert_eq!(range.len(), 3);

        let kv = KnotVector::open_uniform(1, 2).unwrap();
        let (_, range) = kv.nonzero_span(0.0);
        assert_eq!(range, 0..2);
    }

    #[test]
    fn span_evaluation_matches_recursion() {
        let kv = KnotVector::open_uniform(3, 8).unwrap();
        let mut vals = [0.0; MAX_DEGREE + 1];
        let mut ders = [0.0; MAX_DEGREE + 1];
        for &xi in &[0.0, 0.111, 0.25, 0.5, 0.777, 0.999, 1.0] {
            let (span, range) = kv.nonzero_span(xi);
            kv.eval_nonzero(span, xi, &mut vals);
            for (k, i) in range.clone().enumerate() {
                let direct = kv.eval_basis(i, 3, xi).unwrap();
                assert!((vals[k] - direct).abs() < 1e-13, "xi={xi} i={i}");
            }
            kv.eval_nonzero_with_derivs(span, xi, &mut vals, &mut ders);
            for (k, i) in range.enumerate() {
                let direct = kv.eval_basis(i, 3, xi).unwrap();
                let dd = kv.eval_basis_derivative(i, xi).unwrap();
                assert!((vals[k] - direct).abs() < 1e-13);
                assert!((ders[k] - dd).abs() < 1e-11, "xi={xi} i={i}");
            }
        }
    }

    #[test]
    fn hat_derivative_is_slope() {
        // p = 1, m = 4: left half-support slope is +1/h = +4.
        let kv = KnotVector::open_uniform(1, 4).unwrap();
        assert!((kv.eval_basis_derivative(2, 0.3).unwrap() - 4.0).abs() < 1e-13);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let kv = KnotVector::open_uniform(3, 8).unwrap();
        let eps = 1e-6;
        for &xi in &[0.2, 0.33, 0.49, 0.81] {
            for i in 0..kv.num_basis() {
                let d = kv.eval_basis_derivative(i, xi).unwrap();
                let fp = kv.eval_basis(i, 3, xi + eps).unwrap();
                let fm = kv.eval_basis(i, 3, xi - eps).unwrap();
                let fd = (fp - fm) / (2.0 * eps);
                let scale = d.abs().max(1.0);
                assert!((d - fd).abs() <= 1e-6 * scale, "i={i} xi={xi}: {d} vs {fd}");
            }
        }
    }

    #[test]
    fn derivatives_sum_to_zero() {
        let kv = KnotVector::open_uniform(4, 6).unwrap();
        for &xi in &[0.13, 0.5, 0.86] {
            let sum: f64 = (0..kv.num_basis())
                .map(|i| kv.eval_basis_derivative(i, xi).unwrap())
                .sum();
            assert!(sum.abs() < 1e-11);
        }
    }

    #[test]
    fn constrained_dimension() {
        for (p, m) in [(1usize, 4usize), (3, 8), (5, 16)] {
            let s = SplineSpace1D::bspline(p, m, true).unwrap();
            assert_eq!(s.dim(), p + m - 2);
            let full = SplineSpace1D::bspline(p, m, false).unwrap();
            assert_eq!(full.dim(), p + m);
        }
    }

    #[test]
    fn local_support() {
        let kv = KnotVector::open_uniform(2, 8).unwrap();
        let t = kv.knots();
        for i in 0..kv.num_basis() {
            for &xi in &[0.05, 0.3, 0.62, 0.94] {
                if xi < t[i] || xi > t[i + 2 + 1] {
                    assert_eq!(kv.eval_basis(i, 2, xi).unwrap(), 0.0);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(p in 1usize..=6, m in 1usize..=16, xi in 0.0f64..=1.0) {
            let kv = KnotVector::open_uniform(p, m).unwrap();
            let sum: f64 = (0..kv.num_basis())
                .map(|i| kv.eval_basis(i, p, xi).unwrap())
                .sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }

        #[test]
        fn nonnegativity(p in 1usize..=6, m in 1usize..=16, xi in 0.0f64..=1.0) {
            let kv = KnotVector::open_uniform(p, m).unwrap();
            for i in 0..kv.num_basis() {
                prop_assert!(kv.eval_basis(i, p, xi).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn first_derivative_continuous_across_interior_knots() {
        // One-sided limits at each interior knot: evaluate the polynomial
        // pieces of both neighbouring spans exactly at the knot.
        let mut vals = [0.0; MAX_DEGREE + 1];
        let mut ders_l = [0.0; MAX_DEGREE + 1];
        let mut ders_r = [0.0; MAX_DEGREE + 1];
        for p in 2..=5 {
            let kv = KnotVector::open_uniform(p, 8).unwrap();
            for k in 1..8 {
                let knot = k as f64 / 8.0;
                let right_span = kv.find_span(knot);
                let left_span = right_span - 1;
                kv.eval_nonzero_with_derivs(left_span, knot, &mut vals, &mut ders_l);
                kv.eval_nonzero_with_derivs(right_span, knot, &mut vals, &mut ders_r);
                // Window of the left span is shifted by one relative to the
                // right span; compare per global basis index.
                for j in 0..p {
                    let dl = ders_l[j + 1]; // global index left_span - p + j + 1
                    let dr = ders_r[j]; // same global index
                    assert!((dl - dr).abs() < 1e-10 * (1.0 + dl.abs()), "p={p} k={k} j={j}");
                }
            }
        }
    }

    #[test]
    fn rational_window_sums_to_one() {
        let w: Vec<f64> = (0..7).map(|i| 1.0 + 0.1 * i as f64).collect();
        let s = SplineSpace1D::rational(2, 5, false, w).unwrap();
        for &xi in &[0.0, 0.21, 0.5, 0.87, 1.0] {
            let win = s.eval_window(xi);
            let sum: f64 = win.vals[..win.len].iter().sum();
            let dsum: f64 = win.ders[..win.len].iter().sum();
            assert!((sum - 1.0).abs() < 1e-13);
            assert!(dsum.abs() < 1e-11);
        }
    }
}
