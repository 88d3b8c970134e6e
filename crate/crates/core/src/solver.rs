//! The two-level method: one multiplicative Schwarz sweep on the fine
//! level, defect restriction to a linear/quadratic discretization, coarse
//! correction (exact, or one V(1,1) red-black Gauss-Seidel multigrid cycle,
//! optionally on an aggressively coarsened 2h mesh), prolongation back.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::assemble_stiffness;
use crate::banded::BandedCholesky;
use crate::error::{Error, Result};
use crate::smoothers::{
    build_block_plan, rb_gs_sweep_with_diag, sweep_in_place, BlockPlan, BlockSize, Colouring,
};
use crate::sparse::{axpy, norm2, SparseOperator};
use crate::spline::geometry::{field_space_1d, Axis, GeometryMap};
use crate::spline::SplineSpace2D;
use crate::transfer::{compose_aggressive, degree_restriction, mesh_prolongation, TransferPair};

/// Mesh below which the h-multigrid chain stops and solves directly.
pub const COARSEST_M: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseStrategy {
    /// Exact solve of the p_low discretization on the same mesh.
    Direct,
    /// One V(1,1) red-black Gauss-Seidel cycle on the same mesh.
    VCycle,
    /// Exact solve of the p_low discretization on the 2h mesh.
    AggressiveDirect,
    /// One V(1,1) cycle on the 2h mesh (the improved method).
    AggressiveVCycle,
}

impl CoarseStrategy {
    pub fn is_aggressive(self) -> bool {
        matches!(
            self,
            CoarseStrategy::AggressiveDirect | CoarseStrategy::AggressiveVCycle
        )
    }
}

#[derive(Debug, Clone)]
pub struct TwoLevelConfig {
    pub p: usize,
    pub p_low: usize,
    pub m: usize,
    pub block: BlockSize,
    pub colouring: Colouring,
    pub nu1: usize,
    pub nu2: usize,
    pub strategy: CoarseStrategy,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl TwoLevelConfig {
    pub fn new(p: usize, p_low: usize, m: usize, strategy: CoarseStrategy) -> Self {
        TwoLevelConfig {
            p,
            p_low,
            m,
            block: default_block_for(p),
            colouring: Colouring::ThreeColour,
            nu1: 1,
            nu2: 0,
            strategy,
            tolerance: 1e-8,
            max_iterations: 100,
            seed: 3,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.p_low > self.p {
            return Err(Error::param(format!(
                "coarse degree {} exceeds fine degree {}",
                self.p_low, self.p
            )));
        }
        if self.p_low < 1 || self.p_low > 2 && self.p_low != self.p {
            return Err(Error::param(format!(
                "coarse degree must be 1 or 2 (got {})",
                self.p_low
            )));
        }
        if self.strategy.is_aggressive() && self.m % 2 != 0 {
            return Err(Error::param(format!(
                "aggressive coarsening needs an even subinterval count (got {})",
                self.m
            )));
        }
        Ok(())
    }
}

/// Block size the analysis selects for each spline degree: 3x3 for
/// p = 2, 3, 4; 5x5 for p = 5, 6; 7x7 for p = 7, 8.
pub fn default_block_for(p: usize) -> BlockSize {
    match p {
        0..=4 => BlockSize::Nine,
        5 | 6 => BlockSize::TwentyFive,
        _ => BlockSize::FortyNine,
    }
}

/// Constrained field space of degree `p` on the `m`-subinterval mesh over
/// the given geometry (rational on a NURBS geometry).
pub fn field_space(geom: &GeometryMap, p: usize, m: usize, constrained: bool) -> Result<SplineSpace2D> {
    Ok(SplineSpace2D {
        x: field_space_1d(geom, Axis::X, p, m, constrained)?,
        y: field_space_1d(geom, Axis::Y, p, m, constrained)?,
    })
}

struct VLevel {
    a: SparseOperator,
    diag: Vec<f64>,
    dims: (usize, usize),
    /// Transfer to the next coarser level; absent on the coarsest.
    down: Option<TransferPair>,
}

enum CoarseSolver {
    Direct(BandedCholesky),
    VCycle {
        levels: Vec<VLevel>,
        coarsest: BandedCholesky,
    },
}

pub struct Hierarchy {
    pub cfg: TwoLevelConfig,
    pub geom: GeometryMap,
    pub fine_space: SplineSpace2D,
    pub a_fine: SparseOperator,
    plan: BlockPlan,
    pair: TransferPair,
    coarse: CoarseSolver,
}

pub fn build_hierarchy(cfg: TwoLevelConfig, geom: &GeometryMap) -> Result<Hierarchy> {
    cfg.validate()?;
    let fine_space = field_space(geom, cfg.p, cfg.m, true)?;
    let a_fine = assemble_stiffness(&fine_space, geom)?;
    let plan = build_block_plan(&fine_space, &a_fine, cfg.block, cfg.colouring, geom.is_identity())?;

    let coarse_m = if cfg.strategy.is_aggressive() {
        cfg.m / 2
    } else {
        cfg.m
    };
    let mid_space = field_space(geom, cfg.p_low, cfg.m, true)?;
    let deg_pair = degree_restriction(&fine_space, &mid_space, geom)?;
    let (pair, coarse_space) = if cfg.strategy.is_aggressive() {
        let coarse_space = field_space(geom, cfg.p_low, coarse_m, true)?;
        let mesh_pair = mesh_prolongation(&mid_space, &coarse_space)?;
        (compose_aggressive(&deg_pair, &mesh_pair)?, coarse_space)
    } else {
        (deg_pair, mid_space)
    };
    let a_coarse = assemble_stiffness(&coarse_space, geom)?;

    let coarse = match cfg.strategy {
        CoarseStrategy::Direct | CoarseStrategy::AggressiveDirect => {
            CoarseSolver::Direct(BandedCholesky::factor(&a_coarse)?)
        }
        CoarseStrategy::VCycle | CoarseStrategy::AggressiveVCycle => {
            build_vcycle_chain(geom, cfg.p_low, coarse_m, coarse_space, a_coarse)?
        }
    };
    Ok(Hierarchy {
        cfg,
        geom: geom.clone(),
        fine_space,
        a_fine,
        plan,
        pair,
        coarse,
    })
}

fn build_vcycle_chain(
    geom: &GeometryMap,
    p_low: usize,
    top_m: usize,
    top_space: SplineSpace2D,
    top_a: SparseOperator,
) -> Result<CoarseSolver> {
    // Validate the dyadic chain down to the direct-solve threshold.
    {
        let mut m = top_m;
        while m > COARSEST_M {
            if m % 2 != 0 {
                return Err(Error::param(format!(
                    "mesh {top_m} cannot be halved down to {COARSEST_M} (stuck at {m})"
                )));
            }
            m /= 2;
        }
    }
    let mut levels = Vec::new();
    let mut m = top_m;
    let mut space = top_space;
    let mut a = top_a;
    while m > COARSEST_M {
        let next_space = field_space(geom, p_low, m / 2, true)?;
        let pair = mesh_prolongation(&space, &next_space)?;
        let next_a = assemble_stiffness(&next_space, geom)?;
        levels.push(VLevel {
            diag: a.diagonal(),
            dims: space.dims(),
            a,
            down: Some(pair),
        });
        space = next_space;
        a = next_a;
        m /= 2;
    }
    let coarsest = BandedCholesky::factor(&a)?;
    levels.push(VLevel {
        diag: a.diagonal(),
        dims: space.dims(),
        a,
        down: None,
    });
    Ok(CoarseSolver::VCycle { levels, coarsest })
}

impl Hierarchy {
    pub fn dim(&self) -> usize {
        self.a_fine.nrows()
    }

    pub fn coarse_dim(&self) -> usize {
        self.pair.restriction.nrows()
    }

    pub fn transfer(&self) -> &TransferPair {
        &self.pair
    }

    fn coarse_solve(&self, d: &[f64]) -> Vec<f64> {
        match &self.coarse {
            CoarseSolver::Direct(chol) => chol.solve(d),
            CoarseSolver::VCycle { levels, coarsest } => {
                let mut e = vec![0.0; d.len()];
                vcycle(levels, coarsest, 0, &mut e, d);
                e
            }
        }
    }
}

/// One V(1,1) cycle step at `lvl`; the coarsest level solves directly.
fn vcycle(levels: &[VLevel], coarsest: &BandedCholesky, lvl: usize, x: &mut [f64], b: &[f64]) {
    let level = &levels[lvl];
    if lvl + 1 == levels.len() {
        x.copy_from_slice(&coarsest.solve(b));
        return;
    }
    rb_gs_sweep_with_diag(&level.a, &level.diag, level.dims, x, b);
    let mut r = vec![0.0; b.len()];
    level.a.residual(b, x, &mut r);
    let pair = level.down.as_ref().unwrap();
    let rc = pair.restriction.matvec_alloc(&r);
    let mut ec = vec![0.0; rc.len()];
    vcycle(levels, coarsest, lvl + 1, &mut ec, &rc);
    let up = pair.prolongation.matvec_alloc(&ec);
    axpy(1.0, &up, x);
    rb_gs_sweep_with_diag(&level.a, &level.diag, level.dims, x, b);
}

/// One iteration of the two-level method, updating `x` in place.
pub fn two_level_cycle(h: &Hierarchy, x: &mut [f64], b: &[f64]) {
    for _ in 0..h.cfg.nu1 {
        sweep_in_place(&h.plan, &h.a_fine, x, b);
    }
    let mut r = vec![0.0; b.len()];
    h.a_fine.residual(b, x, &mut r);
    let d = h.pair.restriction.matvec_alloc(&r);
    let e = h.coarse_solve(&d);
    let up = h.pair.prolongation.matvec_alloc(&e);
    axpy(1.0, &up, x);
    for _ in 0..h.cfg.nu2 {
        sweep_in_place(&h.plan, &h.a_fine, x, b);
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub residual_history: Vec<f64>,
    /// Geometric mean of the trailing residual ratios, for information.
    pub rho_h: f64,
    pub wall_seconds: f64,
    /// Final iterate.
    pub solution: Vec<f64>,
}

/// Runs the two-level iteration from a seeded random initial guess until
/// the residual drops by the configured factor.
pub fn solve(h: &Hierarchy, b: &[f64]) -> SolveReport {
    let start = Instant::now();
    let n = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(h.cfg.seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut r = vec![0.0; n];
    h.a_fine.residual(b, &x, &mut r);
    let r0 = norm2(&r);
    let mut history = vec![r0];
    let mut converged = false;
    let mut iterations = 0;
    let target = h.cfg.tolerance * r0;
    for _ in 0..h.cfg.max_iterations {
        two_level_cycle(h, &mut x, b);
        iterations += 1;
        h.a_fine.residual(b, &x, &mut r);
        let rk = norm2(&r);
        history.push(rk);
        if rk <= target {
            converged = true;
            break;
        }
    }
    let rho_h = trailing_rate(&history);
    SolveReport {
        iterations,
        converged,
        residual_history: history,
        rho_h,
        wall_seconds: start.elapsed().as_secs_f64(),
        solution: x,
    }
}

fn trailing_rate(history: &[f64]) -> f64 {
    let ratios: Vec<f64> = history
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    if ratios.is_empty() {
        return 0.0;
    }
    let tail = &ratios[ratios.len().saturating_sub(10)..];
    let log_mean = tail.iter().map(|r| r.max(1e-300).ln()).sum::<f64>() / tail.len() as f64;
    log_mean.exp()
}

#[derive(Debug, Clone)]
pub struct RateReport {
    pub rho_h: f64,
    pub ratios: Vec<f64>,
}

/// Measured asymptotic convergence factor: iterate on a zero right-hand
/// side from a seeded random guess, renormalizing each cycle, and take the
/// geometric mean of the last 10 residual ratios.
pub fn estimate_asymptotic_rate(h: &Hierarchy, cycles: usize) -> Result<RateReport> {
    if cycles < 30 {
        return Err(Error::param("rate estimation needs at least 30 cycles"));
    }
    let n = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(h.cfg.seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let b = vec![0.0; n];
    let mut r = vec![0.0; n];
    h.a_fine.residual(&b, &x, &mut r);
    let r0 = norm2(&r);
    if r0 == 0.0 {
        return Err(Error::numerical("zero initial residual in rate estimation"));
    }
    for v in x.iter_mut() {
        *v /= r0;
    }
    let mut ratios = Vec::with_capacity(cycles);
    for _ in 0..cycles {
        two_level_cycle(h, &mut x, &b);
        h.a_fine.residual(&b, &x, &mut r);
        let nr = norm2(&r);
        ratios.push(nr);
        if nr < 1e-10 {
            // Exact (or nearly exact) solver: the measured factor is the
            // tiny first ratio; further cycles only amplify roundoff.
            break;
        }
        for v in x.iter_mut() {
            *v /= nr;
        }
    }
    let tail = &ratios[ratios.len().saturating_sub(10)..];
    let log_mean = tail.iter().map(|r| r.max(1e-300).ln()).sum::<f64>() / tail.len() as f64;
    Ok(RateReport {
        rho_h: log_mean.exp(),
        ratios,
    })
}
