//! Bundled reference data for the `reproduce` command: the convergence
//! factors and iteration counts this solver is designed to reproduce.

/// Spline degrees covered by the factor tables.
pub const DEGREES: [usize; 7] = [2, 3, 4, 5, 6, 7, 8];

/// Block sizes (points per Schwarz block) of the table columns.
pub const BLOCKS: [usize; 3] = [9, 25, 49];

/// Two-grid factors rho_2g (exact coarse solve, same mesh, p_low = 1);
/// rows follow DEGREES, columns follow BLOCKS.
pub const TABLE1_RHO_2G: [[f64; 3]; 7] = [
    [0.1234, 0.0813, 0.0604],
    [0.2150, 0.0874, 0.0622],
    [0.4581, 0.1294, 0.0697],
    [0.7095, 0.2690, 0.1001],
    [0.8786, 0.4549, 0.1909],
    [0.9576, 0.6623, 0.3260],
    [0.9868, 0.8278, 0.4885],
];

/// Measured asymptotic factors rho_h reported next to TABLE1_RHO_2G.
pub const TABLE1_RHO_H: [[f64; 3]; 7] = [
    [0.1212, 0.0752, 0.0725],
    [0.2141, 0.0854, 0.0712],
    [0.4558, 0.1466, 0.0852],
    [0.7058, 0.2847, 0.1215],
    [0.8756, 0.4555, 0.2113],
    [0.9573, 0.6601, 0.3284],
    [0.9851, 0.8146, 0.4764],
];

/// Three-grid factors rho_3g (coarse solve approximated by one V(1,1)
/// red-black Gauss-Seidel step).
pub const TABLE2_RHO_3G: [[f64; 3]; 7] = [
    [0.1281, 0.0847, 0.0624],
    [0.2144, 0.0920, 0.0690],
    [0.4566, 0.1290, 0.0733],
    [0.7078, 0.2676, 0.0986],
    [0.8773, 0.4549, 0.1909],
    [0.9569, 0.6591, 0.3174],
    [0.9864, 0.8250, 0.4734],
];

/// Aggressive two-grid factors rho_2g^ag (coarse level at p_low and 2h).
pub const TABLE3_RHO_AG: [[f64; 3]; 7] = [
    [0.1723, 0.1137, 0.0837],
    [0.2145, 0.1152, 0.0863],
    [0.4566, 0.1290, 0.0874],
    [0.7078, 0.2676, 0.0986],
    [0.8773, 0.4549, 0.1909],
    [0.9569, 0.6591, 0.3174],
    [0.9864, 0.8250, 0.4734],
];

/// Mesh resolutions (subintervals per direction) of the square-domain
/// iteration-count table.
pub const TABLE4_GRIDS: [usize; 5] = [64, 128, 256, 512, 1024];

/// Iterations to reduce the residual by 1e-8 on the square domain with the
/// aggressive + V(1,1) strategy; rows follow TABLE4_GRIDS, columns DEGREES.
pub const TABLE4_ITERATIONS: [[usize; 7]; 5] = [
    [6, 6, 7, 5, 5, 4, 4],
    [6, 6, 7, 5, 5, 4, 4],
    [6, 6, 7, 5, 5, 5, 5],
    [6, 6, 7, 5, 5, 5, 5],
    [6, 6, 7, 6, 5, 5, 5],
];

/// Spline degrees of the quarter-annulus table.
pub const TABLE5_DEGREES: [usize; 6] = [3, 4, 5, 6, 7, 8];

pub const TABLE5_GRIDS: [usize; 4] = [32, 64, 128, 256];

/// Direct-solve (same-mesh quadratic coarse level) iteration counts on the
/// quarter annulus; rows follow TABLE5_GRIDS, columns TABLE5_DEGREES.
pub const TABLE5_DS: [[usize; 6]; 4] = [
    [5, 8, 4, 6, 3, 4],
    [5, 8, 4, 6, 4, 5],
    [6, 7, 4, 6, 4, 5],
    [6, 8, 4, 6, 4, 5],
];

/// Aggressive + V(1,1) multigrid iteration counts on the quarter annulus.
pub const TABLE5_MG: [[usize; 6]; 4] = [
    [5, 8, 4, 6, 3, 4],
    [7, 8, 5, 6, 4, 5],
    [8, 8, 6, 6, 5, 5],
    [9, 8, 6, 6, 6, 6],
];

/// Absolute tolerance on reproduced convergence factors.
pub const RHO_TOLERANCE: f64 = 0.05;

/// Allowed deviation of reproduced iteration counts.
pub const ITERATION_TOLERANCE: usize = 1;
