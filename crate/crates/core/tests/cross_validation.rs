//! Cross-validation between the measured solver and the torus analysis.
//!
//! The two paths share no code beyond the assembled stiffness entries, so
//! agreement pins down both the sweep implementation and the periodic
//! operator constructions. Measured Dirichlet rates approach the torus
//! values only when the mesh resolves the dominant analysis modes, so the
//! comparisons run in regimes where m = 64 is already asymptotic.

use igatwo::lfa::{build_torus_problem, spectral_factor, Variant, LFA_ORDERING};
use igatwo::smoothers::BlockSize;
use igatwo::solver::{build_hierarchy, estimate_asymptotic_rate, CoarseStrategy, TwoLevelConfig};
use igatwo::spline::geometry::GeometryMap;

#[test]
fn measured_rates_match_torus_predictions_in_asymptotic_regime() {
    // Smoother-limited cells: the factor is insensitive to the boundary,
    // and m = 64 measurements sit on top of the torus prediction.
    let geom = GeometryMap::IdentitySquare;
    for p in [6usize, 7, 8] {
        let mut cfg = TwoLevelConfig::new(p, 1, 64, CoarseStrategy::Direct);
        cfg.block = BlockSize::Nine;
        cfg.colouring = LFA_ORDERING;
        let h = build_hierarchy(cfg, &geom).unwrap();
        let measured = estimate_asymptotic_rate(&h, 150).unwrap().rho_h;
        let tp = build_torus_problem(p, 1, BlockSize::Nine, Variant::TwoGrid, 48, 1, 0, LFA_ORDERING)
            .unwrap();
        let predicted = spectral_factor(&tp, 1e-4, 7).rho;
        let delta = (measured - predicted).abs();
        println!("p={p}: measured {measured:.4}, torus {predicted:.4}, delta {delta:.4}");
        assert!(delta <= 0.05, "p={p}: {delta}");
    }
}

#[test]
fn smoother_limited_two_grid_equals_smoother_alone() {
    // At p = 8 with 9-point blocks the coarse correction barely moves the
    // radius: the smoother-only factor and the two-grid factor coincide.
    let smoother = {
        let tp = build_torus_problem(
            8,
            1,
            BlockSize::Nine,
            Variant::SmootherOnly,
            48,
            1,
            0,
            LFA_ORDERING,
        )
        .unwrap();
        spectral_factor(&tp, 1e-4, 7).rho
    };
    let two_grid = {
        let tp = build_torus_problem(8, 1, BlockSize::Nine, Variant::TwoGrid, 48, 1, 0, LFA_ORDERING)
            .unwrap();
        spectral_factor(&tp, 1e-4, 7).rho
    };
    let delta = (smoother - two_grid).abs();
    println!("smoother-only {smoother:.4}, two-grid {two_grid:.4}");
    assert!(delta <= 0.01, "delta {delta}");
    assert!(smoother >= two_grid - 1e-6, "coarse correction cannot hurt");
}

#[test]
fn colour_ordering_accelerates_the_sweep() {
    // The colour-reordered sweep converges strictly faster than the natural
    // ordering on the representative (p = 3, 9-point) configuration.
    use igatwo::smoothers::Colouring;
    let geom = GeometryMap::IdentitySquare;
    let mut rates = Vec::new();
    for colouring in [Colouring::Lex, Colouring::ThreeColour] {
        let mut cfg = TwoLevelConfig::new(3, 1, 48, CoarseStrategy::Direct);
        cfg.colouring = colouring;
        let h = build_hierarchy(cfg, &geom).unwrap();
        rates.push(estimate_asymptotic_rate(&h, 60).unwrap().rho_h);
    }
    println!("lex {:.4}, colour {:.4}", rates[0], rates[1]);
    assert!(rates[1] < rates[0]);
}
