//! Knot insertion. Midpoint refinement of an open uniform knot vector is the
//! exact embedding of the coarse spline space into the refined one; the
//! accumulated Boehm steps give the matrix taking coarse coefficients to
//! fine ones.

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

use super::KnotVector;

/// Inserts the midpoint of every span of `coarse`, returning the refined
/// knot vector and the (full-space) coefficient map, of shape
/// `(2m + p) x (m + p)` with rows indexing the fine basis.
pub fn midpoint_insertion_matrix(coarse: &KnotVector) -> (KnotVector, SparseOperator) {
    let p = coarse.degree();
    let m = coarse.subintervals();
    let ncols = coarse.num_basis();
    let mut knots: Vec<f64> = coarse.knots().to_vec();
    // Rows of the accumulated map, one per current basis function.
    let mut rows: Vec<Vec<(usize, f64)>> = (0..ncols).map(|i| vec![(i, 1.0)]).collect();
    for i in 0..m {
        let t = (2 * i + 1) as f64 / (2 * m) as f64;
        insert_single(p, &mut knots, &mut rows, t);
    }
    let fine = KnotVector::from_knots(p, knots);
    debug_assert_eq!(fine.subintervals(), 2 * m);
    debug_assert_eq!(rows.len(), fine.num_basis());
    let mut trip = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            if v != 0.0 {
                trip.push((r, c, v));
            }
        }
    }
    (fine, SparseOperator::from_triplets(rows.len(), ncols, trip))
}

/// One Boehm insertion of knot `t`, updating the knot list and the
/// accumulated coefficient rows in place.
fn insert_single(p: usize, knots: &mut Vec<f64>, rows: &mut Vec<Vec<(usize, f64)>>, t: f64) {
    // Span k with knots[k] <= t < knots[k+1].
    let mut k = 0;
    while !(knots[k] <= t && t < knots[k + 1]) {
        k += 1;
    }
    let mut new_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(rows.len() + 1);
    for i in 0..=rows.len() {
        if i + p <= k {
            // alpha = 1: copy of old row i (only valid while i < len).
            new_rows.push(rows[i].clone());
        } else if i > k {
            new_rows.push(rows[i - 1].clone());
        } else {
            let alpha = (t - knots[i]) / (knots[i + p] - knots[i]);
            let mut blended: Vec<(usize, f64)> = Vec::new();
            for &(c, v) in &rows[i] {
                blended.push((c, alpha * v));
            }
            for &(c, v) in &rows[i - 1] {
                match blended.iter_mut().find(|(cc, _)| *cc == c) {
                    Some((_, acc)) => *acc += (1.0 - alpha) * v,
                    None => blended.push((c, (1.0 - alpha) * v)),
                }
            }
            new_rows.push(blended);
        }
    }
    *rows = new_rows;
    knots.insert(k + 1, t);
}

/// Embedding of the full space on `m` subintervals into the one on `2m`,
/// validating that `fine` really is the midpoint refinement of `coarse`.
pub fn embedding_full(p: usize, coarse_m: usize, fine_m: usize) -> Result<SparseOperator> {
    if fine_m != 2 * coarse_m {
        return Err(Error::param(format!(
            "mesh transfer requires a dyadic pair, got {fine_m} vs {coarse_m}"
        )));
    }
    let coarse = KnotVector::open_uniform(p, coarse_m)?;
    let (fine_kv, op) = midpoint_insertion_matrix(&coarse);
    let target = KnotVector::open_uniform(p, fine_m)?;
    for (a, b) in fine_kv.knots().iter().zip(target.knots()) {
        if (a - b).abs() > 1e-14 {
            return Err(Error::numerical("refined knots do not match the target mesh"));
        }
    }
    Ok(op)
}
