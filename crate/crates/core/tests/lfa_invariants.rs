//! Fourier-structure invariants of the torus operators: the same-mesh
//! transfers act mode by mode, the mesh-coarsening transfer couples exactly
//! the four 2h-harmonics, and the estimated radii are stable in the torus
//! extent.

use igatwo::lfa::torus::{circulant_separable, mesh_prolongation_torus, subdivision_mask};
use igatwo::lfa::{
    build_torus_problem, degree_restriction_row_1d, spectral_factor, Variant, LFA_ORDERING,
};
use igatwo::smoothers::BlockSize;
use igatwo::sparse::SparseOperator;

/// Complex DFT coefficient of a real grid vector at frequency (k1, k2).
fn dft_coefficient(v: &[f64], n: usize, k1: usize, k2: usize) -> (f64, f64) {
    let mut re = 0.0;
    let mut im = 0.0;
    for i in 0..n {
        for j in 0..n {
            let phase =
                -2.0 * std::f64::consts::PI * ((k1 * i) as f64 + (k2 * j) as f64) / n as f64;
            re += v[i * n + j] * phase.cos();
            im += v[i * n + j] * phase.sin();
        }
    }
    (re / (n * n) as f64, im / (n * n) as f64)
}

fn mode(n: usize, k1: usize, k2: usize, imag: bool) -> Vec<f64> {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let phase = 2.0 * std::f64::consts::PI * ((k1 * i) as f64 + (k2 * j) as f64) / n as f64;
            v[i * n + j] = if imag { phase.sin() } else { phase.cos() };
        }
    }
    v
}

/// Energy of `v` outside the given frequency set.
fn leakage(v: &[f64], n: usize, keep: &[(usize, usize)]) -> f64 {
    let mut worst = 0.0f64;
    for k1 in 0..n {
        for k2 in 0..n {
            if keep.contains(&(k1, k2)) {
                continue;
            }
            let (re, im) = dft_coefficient(v, n, k1, k2);
            worst = worst.max((re * re + im * im).sqrt());
        }
    }
    worst
}

#[test]
fn degree_transfer_is_mode_diagonal() {
    // The circulant same-mesh degree transfer maps each Fourier mode to a
    // multiple of itself.
    let n = 12;
    let (anchor, row) = degree_restriction_row_1d(1, 3).unwrap();
    let r = circulant_separable(n, anchor, &row);
    for &(k1, k2) in &[(1usize, 0usize), (3, 5), (6, 6), (11, 2)] {
        for imag in [false, true] {
            let v = mode(n, k1, k2, imag);
            let out = r.matvec_alloc(&v);
            // The output spectrum may only contain (k1, k2) and its complex
            // conjugate partner (n-k1, n-k2) since the input is real.
            let partner = ((n - k1) % n, (n - k2) % n);
            let leak = leakage(&out, n, &[(k1, k2), partner]);
            assert!(leak <= 1e-10, "mode ({k1},{k2}) leaks {leak:.2e}");
        }
    }
}

#[test]
fn mesh_transfer_couples_exactly_four_harmonics() {
    let n = 12;
    let nc = n / 2;
    for q in [1usize, 2] {
        let p_mesh = mesh_prolongation_torus(n, &subdivision_mask(q));
        for &(k1, k2) in &[(1usize, 2usize), (0, 1), (2, 2)] {
            for imag in [false, true] {
                // Coarse mode on the (n/2) torus.
                let mut v = vec![0.0; nc * nc];
                for i in 0..nc {
                    for j in 0..nc {
                        let phase = 2.0 * std::f64::consts::PI
                            * ((k1 * i) as f64 + (k2 * j) as f64)
                            / nc as f64;
                        v[i * nc + j] = if imag { phase.sin() } else { phase.cos() };
                    }
                }
                let out = p_mesh.matvec_alloc(&v);
                // Prolongation lands in the span of the four 2h-harmonics
                // (plus conjugates, since the modes here are real).
                let mut keep = Vec::new();
                for a in [k1, k1 + nc] {
                    for b in [k2, k2 + nc] {
                        keep.push((a % n, b % n));
                        keep.push(((n - a % n) % n, (n - b % n) % n));
                    }
                }
                let leak = leakage(&out, n, &keep);
                assert!(leak <= 1e-10, "q={q} mode ({k1},{k2}) leaks {leak:.2e}");
            }
        }
    }
}

#[test]
fn identity_degree_pair_makes_transfer_trivial() {
    // p == p_low pairs are the identity on the torus.
    let n = 12;
    let tp = build_torus_problem(2, 2, BlockSize::Nine, Variant::TwoGrid, n, 1, 0, LFA_ORDERING)
        .unwrap();
    assert_eq!(tp.coarse_dim(), n * n);
    let rep = spectral_factor(&tp, 1e-6, 1);
    assert!(rep.rho <= 1e-10);
}

#[test]
fn torus_estimates_stable_in_extent() {
    // Estimated radius changes by less than 0.01 between n = 48 and n = 96
    // for the p = 2..4, 9-point two-grid cases.
    for p in 2..=4 {
        let mut radii = Vec::new();
        for n in [48usize, 96] {
            let tp =
                build_torus_problem(p, 1, BlockSize::Nine, Variant::TwoGrid, n, 1, 0, LFA_ORDERING)
                    .unwrap();
            radii.push(spectral_factor(&tp, 1e-4, 7).rho);
        }
        let delta = (radii[0] - radii[1]).abs();
        println!("p={p}: n=48 {:.4}, n=96 {:.4}, delta {delta:.4}", radii[0], radii[1]);
        assert!(delta < 0.01, "p={p}: {delta}");
    }
}

#[test]
fn circulant_transfer_row_is_local() {
    let (anchor, row) = degree_restriction_row_1d(1, 3).unwrap();
    assert!(row.len() <= 1 + 3 + 1);
    assert!(anchor <= 0);
    let n = 18;
    let r: SparseOperator = circulant_separable(n, anchor, &row);
    for i in 0..n * n {
        let (cols, _) = r.row(i);
        assert!(cols.len() <= row.len() * row.len());
    }
}
