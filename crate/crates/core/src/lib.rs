//! Numerical toolkit for Volterra equations
//!
//! ```text
//! y_t = a + ∫_0^t φ(t - u) dx_u σ(y_u)
//! ```
//!
//! driven by Hölder signals of regularity γ > 1/3, where the kernel is a
//! superposition of decaying exponentials `φ(v) = Σ_k w_k e^{-ξ_k v}`.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`]: time grids, k-increments, the coboundary `δ`, its twisted
//!   counterpart `δ̃` (and `δ̿` for doubly indexed increments), Hölder and
//!   `L_β` norms, and an empirical Hölder exponent estimator.
//! * [`sewing`]: dyadic sewing maps `Λ` / `Λ̃` and compensated Riemann sums.
//! * [`laplace`]: atomic kernel measures and their quadrature construction.
//! * [`lift`]: driver sampling (fBm, Brownian, smooth) and exact rough lifts
//!   of piecewise-linear paths.
//! * [`solver`]: Young and rough convolutional integrals, controlled paths and
//!   the interval-patching Picard solvers.
//! * [`harness`]: config-driven experiments, CSV output and the built-in
//!   oracles used by the acceptance checks.

pub mod algebra;
pub mod error;
pub mod harness;
pub mod laplace;
pub mod lift;
pub(crate) mod quad;
pub mod sewing;
pub mod solver;

pub use error::{Error, Result};
