//! Optimization engines shared by the trainers.
//!
//! - [`lp`]: dense two-phase simplex for the piecewise-linear reformulations.
//! - [`composite`]: projected subgradient with ellipsoid refinement for
//!   nonsmooth convex objectives under a norm-cone coupling `λ ≥ c‖w‖`.
//! - [`eig`]: symmetric square roots used for kernel matrices.

pub mod composite;
pub mod eig;
pub mod lp;

pub use composite::{solve_composite, CompositeProblem, CompositeSolution, Coupling, Objective};
pub use eig::{sym_eig_pinv_sqrt, sym_eig_sqrt};
pub use lp::{solve_lp, LinearProgram, LpSolution, LpStatus, Sense};

/// Iteration limits and tolerances shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iterations: usize,
    /// Relative objective change over a 100-iteration window (first-order
    /// phase) and relative optimality gap (refinement phase).
    pub tolerance: f64,
    /// Step scale `c0` of the `c0/√k` subgradient schedule.
    pub step: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_iterations: 50_000, tolerance: 1e-8, step: 1.0, seed: 0 }
    }
}
