//! Drivers and their exact convolutional lifts.
//!
//! A [`DriverPath`] is interpolated linearly between its samples, so every
//! lift component is a finite sum of exponentials per cell and is computed
//! in closed form by [`RoughLift`]. Samplers for fractional Brownian motion
//! and Brownian motion, the Itô-type left-point lift and the Wiener-integral
//! covariance used as a Monte-Carlo oracle live here as well.

mod cov;
mod driver;
pub mod expint;
mod fbm;
mod ito;
mod rough;

pub use cov::wiener_cov_x1;
pub use driver::{DriverKind, DriverPath};
pub use expint::exp_int;
pub use fbm::{sample_brownian, sample_fbm, FbmSampler, MAX_POINTS};
pub use ito::lift_ito_x2;
pub use rough::{Hypotheses, RoughLift};
