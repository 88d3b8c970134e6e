//! Inter-level transfer operators.
//!
//! Degree transfer (p -> p_low at fixed mesh) is the lumped L2 projection:
//! restriction D^{-1} M with D the row-sum lumped coarse mass, prolongation
//! its transpose. Mesh transfer (h -> 2h at fixed degree) is the exact
//! knot-insertion embedding, restricted by its transpose; with coarse
//! operators assembled by rediscretization the plain transpose is the
//! variationally consistent choice (R A P equals the coarse matrix).

use crate::assembly::{assemble_load, assemble_mass};
use crate::error::{Error, Result};
use crate::sparse::SparseOperator;
use crate::spline::geometry::GeometryMap;
use crate::spline::insert::embedding_full;
use crate::spline::SplineSpace2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferKind {
    Degree,
    Mesh,
    Composed,
}

/// Restriction (coarse x fine) and prolongation (fine x coarse) between two
/// levels of the hierarchy.
#[derive(Debug, Clone)]
pub struct TransferPair {
    pub restriction: SparseOperator,
    pub prolongation: SparseOperator,
    pub kind: TransferKind,
}

/// Lumped L2 projection between spaces of different degree on one mesh.
/// Equal degrees give the exact-inverse degenerate case: the identity pair.
pub fn degree_restriction(
    fine: &SplineSpace2D,
    coarse: &SplineSpace2D,
    geom: &GeometryMap,
) -> Result<TransferPair> {
    if fine.x.subintervals() != coarse.x.subintervals()
        || fine.y.subintervals() != coarse.y.subintervals()
    {
        return Err(Error::param("degree transfer requires a common mesh"));
    }
    if coarse.x.degree() > fine.x.degree() || coarse.y.degree() > fine.y.degree() {
        return Err(Error::param(
            "degree transfer requires coarse degree <= fine degree",
        ));
    }
    if fine.x.constrained() != coarse.x.constrained() {
        return Err(Error::param("degree transfer requires matching constraints"));
    }
    if coarse.x.degree() == fine.x.degree() && coarse.y.degree() == fine.y.degree() {
        let same_weights = coarse.x.weights() == fine.x.weights()
            && coarse.y.weights() == fine.y.weights();
        if same_weights {
            let id = SparseOperator::identity(fine.dim());
            return Ok(TransferPair {
                restriction: id.clone(),
                prolongation: id,
                kind: TransferKind::Degree,
            });
        }
    }
    let cross = assemble_mass(coarse, fine, geom)?;
    let lump = lumped_coarse_mass(coarse, geom)?;
    let mut restriction = cross;
    let inv: Vec<f64> = lump.iter().map(|&d| 1.0 / d).collect();
    restriction.scale_rows(&inv);
    let prolongation = restriction.transpose();
    Ok(TransferPair {
        restriction,
        prolongation,
        kind: TransferKind::Degree,
    })
}

/// Row sums of the unconstrained coarse mass, restricted to the space's
/// index set. By partition of unity each entry is the integral of one basis
/// function against the geometry measure, hence positive.
fn lumped_coarse_mass(coarse: &SplineSpace2D, geom: &GeometryMap) -> Result<Vec<f64>> {
    let full = SplineSpace2D {
        x: coarse.x.with_constrained(false),
        y: coarse.y.with_constrained(false),
    };
    let load = assemble_load(&full, geom, |_, _| 1.0)?;
    let (nx, ny) = coarse.dims();
    let ny_full = full.y.dim();
    let mut out = Vec::with_capacity(nx * ny);
    for ix in 0..nx {
        let fx = coarse.x.full_index(ix);
        for iy in 0..ny {
            let fy = coarse.y.full_index(iy);
            out.push(load[fx * ny_full + fy]);
        }
    }
    Ok(out)
}

/// Exact embedding of the coarse-mesh space into the fine one (same degree,
/// dyadic meshes); restriction is the transpose.
pub fn mesh_prolongation(fine: &SplineSpace2D, coarse: &SplineSpace2D) -> Result<TransferPair> {
    if fine.x.degree() != coarse.x.degree() || fine.y.degree() != coarse.y.degree() {
        return Err(Error::param("mesh transfer requires equal degrees"));
    }
    if fine.x.constrained() != coarse.x.constrained() {
        return Err(Error::param("mesh transfer requires matching constraints"));
    }
    let px = directional_embedding(&fine.x, &coarse.x)?;
    let py = directional_embedding(&fine.y, &coarse.y)?;
    let prolongation = SparseOperator::kron(&px, &py);
    let restriction = prolongation.transpose();
    Ok(TransferPair {
        restriction,
        prolongation,
        kind: TransferKind::Mesh,
    })
}

fn directional_embedding(
    fine: &crate::spline::SplineSpace1D,
    coarse: &crate::spline::SplineSpace1D,
) -> Result<SparseOperator> {
    let p = fine.degree();
    let full = embedding_full(p, coarse.subintervals(), fine.subintervals())?;
    // Rational spaces embed in homogeneous coordinates: scale columns by the
    // coarse weights and rows by the inverse fine weights.
    let scaled = match (fine.weights(), coarse.weights()) {
        (None, None) => full,
        (Some(wf), Some(wc)) => {
            let mut trip = Vec::new();
            for i in 0..full.nrows() {
                let (cols, vals) = full.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    trip.push((i, j, v * wc[j] / wf[i]));
                }
            }
            SparseOperator::from_triplets(full.nrows(), full.ncols(), trip)
        }
        _ => {
            return Err(Error::param(
                "mesh transfer between rational and polynomial spaces",
            ))
        }
    };
    if fine.constrained() {
        let (nf, nc) = (scaled.nrows(), scaled.ncols());
        Ok(scaled.submatrix(1..nf - 1, 1..nc - 1))
    } else {
        Ok(scaled)
    }
}

/// Aggressive coarsening: degree transfer at mesh h composed with mesh
/// transfer at the low degree.
pub fn compose_aggressive(degree: &TransferPair, mesh: &TransferPair) -> Result<TransferPair> {
    if mesh.restriction.ncols() != degree.restriction.nrows() {
        return Err(Error::param(format!(
            "composition dimension mismatch: mesh acts on {}, degree produces {}",
            mesh.restriction.ncols(),
            degree.restriction.nrows()
        )));
    }
    Ok(TransferPair {
        restriction: mesh.restriction.matmul(&degree.restriction)?,
        prolongation: degree.prolongation.matmul(&mesh.prolongation)?,
        kind: TransferKind::Composed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_stiffness, eval_field};
    use crate::dense::solve_dense;
    use crate::spline::SplineSpace1D;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square_space(p: usize, m: usize, constrained: bool) -> SplineSpace2D {
        SplineSpace2D::bspline(p, m, constrained).unwrap()
    }

    #[test]
    fn equal_degree_gives_identity() {
        let s = square_space(3, 8, true);
        let pair = degree_restriction(&s, &s, &GeometryMap::IdentitySquare).unwrap();
        assert_eq!(pair.restriction.nnz(), s.dim());
        for i in 0..s.dim() {
            assert_eq!(pair.restriction.entry(i, i), 1.0);
        }
    }

    #[test]
    fn degree_restriction_preserves_constants() {
        let fine = square_space(3, 8, false);
        let coarse = square_space(1, 8, false);
        let pair = degree_restriction(&fine, &coarse, &GeometryMap::IdentitySquare).unwrap();
        let ones = vec![1.0; fine.dim()];
        let r = pair.restriction.matvec_alloc(&ones);
        for v in r {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn composed_restriction_scales_constants_by_cell_ratio() {
        // Mesh restriction is the plain transpose of the embedding: interior
        // rows map the all-ones vector to 2^d = 4; boundary rows see the
        // clipped columns of the open knot vector. The degree factor is
        // constant-preserving everywhere.
        let fine = square_space(3, 8, false);
        let mid = square_space(1, 8, false);
        let coarse = square_space(1, 4, false);
        let deg = degree_restriction(&fine, &mid, &GeometryMap::IdentitySquare).unwrap();
        let mesh = mesh_prolongation(&mid, &coarse).unwrap();
        let pair = compose_aggressive(&deg, &mesh).unwrap();
        let ones = vec![1.0; fine.dim()];
        let r = pair.restriction.matvec_alloc(&ones);
        let (ncx, ncy) = coarse.dims();
        for ix in 2..ncx - 2 {
            for iy in 2..ncy - 2 {
                let v = r[coarse.global(ix, iy)];
                assert!((v - 4.0).abs() < 1e-12, "({ix},{iy}): {v}");
            }
        }
        // The mesh prolongation (exact embedding) preserves constants
        // everywhere, boundary included.
        let ones_c = vec![1.0; coarse.dim()];
        let up = mesh.prolongation.matvec_alloc(&ones_c);
        for v in up {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn prolongation_is_adjoint_of_restriction() {
        // P = M^T D^{-1}, computed independently of the constructor path.
        let fine = square_space(2, 4, true);
        let coarse = square_space(1, 4, true);
        let geom = GeometryMap::IdentitySquare;
        let pair = degree_restriction(&fine, &coarse, &geom).unwrap();
        let m = assemble_mass(&coarse, &fine, &geom).unwrap();
        let d = super::lumped_coarse_mass(&coarse, &geom).unwrap();
        let mt = m.transpose();
        let mut worst = 0.0f64;
        for i in 0..mt.nrows() {
            for j in 0..mt.ncols() {
                worst = worst.max((pair.prolongation.entry(i, j) - mt.entry(i, j) / d[j]).abs());
            }
        }
        assert!(worst <= 1e-12);
    }

    #[test]
    fn degree_restriction_row_support_is_local() {
        let fine = square_space(3, 16, true);
        let coarse = square_space(1, 16, true);
        let pair = degree_restriction(&fine, &coarse, &GeometryMap::IdentitySquare).unwrap();
        let width = 3 + 1 + 1; // p + p_low + 1 per direction
        for i in 0..pair.restriction.nrows() {
            let (cols, _) = pair.restriction.row(i);
            assert!(cols.len() <= width * width);
        }
    }

    #[test]
    fn mesh_prolongation_is_exact_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for p in [1usize, 2, 3] {
            let coarse = square_space(p, 4, true);
            let fine = square_space(p, 8, true);
            let pair = mesh_prolongation(&fine, &coarse).unwrap();
            let c: Vec<f64> = (0..coarse.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = pair.prolongation.matvec_alloc(&c);
            for _ in 0..100 {
                let xi: f64 = rng.gen();
                let eta: f64 = rng.gen();
                let a = eval_field(&coarse, &c, xi, eta);
                let b = eval_field(&fine, &f, xi, eta);
                assert!((a - b).abs() < 1e-12, "p={p}");
            }
        }
    }

    #[test]
    fn mesh_pair_satisfies_galerkin_identity() {
        // R A_h P equals the rediscretized coarse matrix entrywise; this is
        // what fixes the restriction scaling.
        let geom = GeometryMap::IdentitySquare;
        let coarse = square_space(2, 4, true);
        let fine = square_space(2, 8, true);
        let pair = mesh_prolongation(&fine, &coarse).unwrap();
        let a_h = assemble_stiffness(&fine, &geom).unwrap();
        let a_2h = assemble_stiffness(&coarse, &geom).unwrap();
        let rap = pair
            .restriction
            .matmul(&a_h)
            .unwrap()
            .matmul(&pair.prolongation)
            .unwrap();
        let mut worst = 0.0f64;
        for i in 0..a_2h.nrows() {
            for j in 0..a_2h.ncols() {
                worst = worst.max((rap.entry(i, j) - a_2h.entry(i, j)).abs());
            }
        }
        assert!(worst <= 1e-10, "Galerkin defect {worst}");
    }

    #[test]
    fn rational_mesh_pair_galerkin_identity_on_annulus() {
        use crate::spline::geometry::{field_space_1d, Axis};
        let geom = GeometryMap::quarter_annulus(0.3, 0.5).unwrap();
        let space = |m: usize| -> SplineSpace2D {
            SplineSpace2D {
                x: field_space_1d(&geom, Axis::X, 2, m, true).unwrap(),
                y: field_space_1d(&geom, Axis::Y, 2, m, true).unwrap(),
            }
        };
        let coarse = space(4);
        let fine = space(8);
        let pair = mesh_prolongation(&fine, &coarse).unwrap();
        let a_h = assemble_stiffness(&fine, &geom).unwrap();
        let a_2h = assemble_stiffness(&coarse, &geom).unwrap();
        let rap = pair
            .restriction
            .matmul(&a_h)
            .unwrap()
            .matmul(&pair.prolongation)
            .unwrap();
        let mut worst = 0.0f64;
        for i in 0..a_2h.nrows() {
            for j in 0..a_2h.ncols() {
                worst = worst.max((rap.entry(i, j) - a_2h.entry(i, j)).abs());
            }
        }
        assert!(worst <= 1e-8, "Galerkin defect {worst}");
    }

    #[test]
    fn composed_pair_dimensions() {
        let (p, p_low, m) = (3usize, 1usize, 16usize);
        let fine = square_space(p, m, true);
        let mid = square_space(p_low, m, true);
        let coarse = square_space(p_low, m / 2, true);
        let deg = degree_restriction(&fine, &mid, &GeometryMap::IdentitySquare).unwrap();
        let mesh = mesh_prolongation(&mid, &coarse).unwrap();
        let pair = compose_aggressive(&deg, &mesh).unwrap();
        let expect_coarse = (p_low + m / 2 - 2).pow(2);
        let expect_fine = (p + m - 2).pow(2);
        assert_eq!(pair.restriction.nrows(), expect_coarse);
        assert_eq!(pair.restriction.ncols(), expect_fine);
        assert_eq!(pair.prolongation.nrows(), expect_fine);
        assert_eq!(pair.prolongation.ncols(), expect_coarse);
    }

    #[test]
    fn composing_with_identity_degree_pair_gives_mesh_pair() {
        let mid = square_space(2, 8, true);
        let coarse = square_space(2, 4, true);
        let deg = degree_restriction(&mid, &mid, &GeometryMap::IdentitySquare).unwrap();
        let mesh = mesh_prolongation(&mid, &coarse).unwrap();
        let pair = compose_aggressive(&deg, &mesh).unwrap();
        for i in 0..pair.restriction.nrows() {
            for j in 0..pair.restriction.ncols() {
                assert_eq!(pair.restriction.entry(i, j), mesh.restriction.entry(i, j));
            }
        }
    }

    fn to_dense(m: &SparseOperator) -> Vec<f64> {
        let n = m.nrows();
        let mut dense = vec![0.0; n * m.ncols()];
        for i in 0..n {
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                dense[i * m.ncols() + j] = v;
            }
        }
        dense
    }

    /// Max coefficient errors of (a) restriction-then-prolongation of smooth
    /// data and (b) the lumped restriction against the exact (dense-solved)
    /// L2 projection.
    fn down_up_errors(p: usize, m: usize) -> (f64, f64) {
        let fine = square_space(p, m, true);
        let coarse = square_space(1, m, true);
        let geom = GeometryMap::IdentitySquare;
        let pair = degree_restriction(&fine, &coarse, &geom).unwrap();

        let mass_f = assemble_mass(&fine, &fine, &geom).unwrap();
        let pi = std::f64::consts::PI;
        let rhs = crate::assembly::assemble_load(&fine, &geom, |x, y| {
            (pi * x).sin() * (pi * y).sin()
        })
        .unwrap();
        let n = fine.dim();
        let c = solve_dense(n, to_dense(&mass_f), rhs).unwrap();

        let down = pair.restriction.matvec_alloc(&c);
        let up = pair.prolongation.matvec_alloc(&down);

        let m_cc = assemble_mass(&coarse, &coarse, &geom).unwrap();
        let m_cf = assemble_mass(&coarse, &fine, &geom).unwrap();
        let nc = coarse.dim();
        let exact_down = solve_dense(nc, to_dense(&m_cc), m_cf.matvec_alloc(&c)).unwrap();

        let roundtrip = c
            .iter()
            .zip(&up)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let lump_gap = down
            .iter()
            .zip(&exact_down)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        (roundtrip, lump_gap)
    }

    #[test]
    fn down_up_reproduces_smooth_data_to_second_order() {
        // Project smooth data down to p_low = 1 and back. Both the roundtrip
        // error and the gap to the exact (unlumped) projection behave as
        // O(h^2): measured constants are ~10 h^2 and ~3.3 h^2.
        let (rt8, lg8) = down_up_errors(3, 8);
        let (rt16, lg16) = down_up_errors(3, 16);
        let h8 = 1.0 / 8.0;
        assert!(rt8 <= 16.0 * h8 * h8, "roundtrip {rt8}");
        assert!(lg8 <= 6.0 * h8 * h8, "lumping gap {lg8}");
        assert!(rt8 / rt16 >= 3.2, "roundtrip order: {rt8} -> {rt16}");
        assert!(lg8 / lg16 >= 3.2, "lumping order: {lg8} -> {lg16}");
    }

    #[test]
    fn mismatched_meshes_rejected() {
        let fine = square_space(3, 8, true);
        let coarse = square_space(1, 4, true);
        assert!(degree_restriction(&fine, &coarse, &GeometryMap::IdentitySquare).is_err());
        let s1 = SplineSpace1D::bspline(2, 8, true).unwrap();
        let s2 = SplineSpace1D::bspline(2, 3, true).unwrap();
        assert!(mesh_prolongation(
            &SplineSpace2D::tensor(s1.clone(), s1),
            &SplineSpace2D::tensor(s2.clone(), s2)
        )
        .is_err());
    }
}
