//! Two-level solver for isogeometric Poisson discretizations.
//!
//! The crate assembles B-spline/NURBS Galerkin systems on the unit square or
//! a quarter annulus, solves them with a two-level method whose fine-level
//! smoother is an overlapping multiplicative Schwarz sweep, and predicts the
//! method's convergence factors with a rigorous Fourier analysis on a
//! periodic torus grid.

pub mod assembly;
pub mod banded;
pub mod cli;
pub mod dense;
pub mod error;
pub mod lfa;
pub mod quadrature;
pub mod smoothers;
pub mod solver;
pub mod sparse;
pub mod spline;
pub mod transfer;

pub use error::{Error, Result};
