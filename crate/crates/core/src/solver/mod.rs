//! Young and rough Volterra solvers in Laplace coordinates.
//!
//! The equation `y_t = a + ∫_0^t φ(t-u) dx_u σ(y_u)` with
//! `φ(v) = Σ_k w_k e^{-ξ_k v}` is solved through the family
//! `ỹ_t(ξ) = ∫_0^t e^{-ξ(t-u)} dx_u σ(y_u)` and `y = a + Σ_k w_k ỹ(ξ_k)`.
//! Shapes follow the row convention: `x̃¹` is `1 x n`, `σ(y)` is `n x d`
//! and `y` is `1 x d`.

mod controlled;
mod engine;
mod integral;
mod sigma;
mod tables;

pub use controlled::{compose_sigma, project_y, ControlledPath, LaplaceControlledPath, ProjectedPath};
pub use engine::{
    solve, solve_rough, solve_rough_diffusion, solve_rough_window, solve_young, solve_young_window, IntervalReport,
    SolveMode, SolveWindow, Solution, SolverConfig,
};
pub use integral::{rough_integral, young_integral};
pub use sigma::{Profile, SigmaField};

#[cfg(test)]
mod tests;
