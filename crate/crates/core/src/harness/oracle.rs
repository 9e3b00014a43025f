//! Reference computations the acceptance checks compare against.

use crate::error::{invalid, Result};
use crate::laplace::KernelMeasure;
use crate::lift::DriverPath;
use crate::quad::integrate;
use crate::solver::SigmaField;

/// Classical RK4 on the augmented system
///
/// ```text
/// ỹ_k' = -ξ_k ỹ_k + x'(t) σ(a + Σ_k w_k ỹ_k),    ỹ_k(0) = 0
/// ```
///
/// along the piecewise-linear driver, with steps no longer than `dt`.
/// Returns `y = a + Σ w ỹ` at every driver grid point.
pub fn rk4_augmented(
    driver: &DriverPath,
    measure: &KernelMeasure,
    sigma: &SigmaField,
    a: &[f64],
    dt: f64,
) -> Result<Vec<Vec<f64>>> {
    if !(dt > 0.0) {
        return invalid(format!("RK4 step must be positive, got {dt}"));
    }
    let (n, d) = (driver.dims(), a.len());
    if sigma.n() != n || sigma.d() != d {
        return invalid("σ shape does not match driver and initial value");
    }
    let atoms = measure.atoms();
    let na = atoms.len();
    let project = |s: &[f64]| -> Vec<f64> {
        (0..d).map(|l| a[l] + (0..na).map(|k| atoms[k].1 * s[k * d + l]).sum::<f64>()).collect()
    };
    let rhs = |s: &[f64], m: &[f64]| -> Vec<f64> {
        let sg = sigma.eval(&project(s));
        let mut out = vec![0.0; na * d];
        for k in 0..na {
            for l in 0..d {
                let drive: f64 = (0..n).map(|i| m[i] * sg[i * d + l]).sum();
                out[k * d + l] = -atoms[k].0 * s[k * d + l] + drive;
            }
        }
        out
    };
    let axpy = |x: &[f64], k: &[f64], f: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + f * b).collect() };

    let grid = driver.grid();
    let mut state = vec![0.0; na * d];
    let mut ys = Vec::with_capacity(grid.len());
    ys.push(project(&state));
    for c in 0..grid.cells() {
        let m = driver.slope(c);
        let len = grid.time(c + 1) - grid.time(c);
        let steps = (len / dt).ceil().max(1.0) as usize;
        let h = len / steps as f64;
        for _ in 0..steps {
            let k1 = rhs(&state, m);
            let k2 = rhs(&axpy(&state, &k1, h / 2.0), m);
            let k3 = rhs(&axpy(&state, &k2, h / 2.0), m);
            let k4 = rhs(&axpy(&state, &k3, h), m);
            for i in 0..state.len() {
                state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        ys.push(project(&state));
    }
    Ok(ys)
}

/// `x̃³_{tus}(ξ_k)` for every atom, straight from the double integral
///
/// ```text
/// ∫_u^t e^{-ξ_k(t-v)} dx_v ⊗ ∫_s^u (φ(v-r) - φ(u-r)) dx_r
/// ```
///
/// with both integrals taken by the midpoint rule on `refine` sub-cells per
/// driver cell. `s <= u <= t` are grid indices. Entry `(i, j)` of each
/// `n x n` block pairs `dx^i` with `dx^j`.
pub fn x3_direct(driver: &DriverPath, measure: &KernelMeasure, s: usize, u: usize, t: usize, refine: usize) -> Result<Vec<f64>> {
    let grid = driver.grid();
    if !(s <= u && u <= t && t < grid.len()) {
        return invalid(format!("need grid indices s <= u <= t, got ({s}, {u}, {t})"));
    }
    if refine == 0 {
        return invalid("refinement must be positive");
    }
    let n = driver.dims();
    let atoms = measure.atoms();
    let na = atoms.len();
    let (tu, tt) = (grid.time(u), grid.time(t));

    // Midpoints and increments of the sub-mesh over the driver cells `lo..hi`.
    let pieces = |lo: usize, hi: usize| {
        (lo..hi).flat_map(move |c| {
            let (a, b) = (grid.time(c), grid.time(c + 1));
            let h = (b - a) / refine as f64;
            (0..refine).map(move |j| (a + (j as f64 + 0.5) * h, h, c))
        })
    };

    // inner[l][j] = x̃¹_{us}(η_l)^j
    let mut inner = vec![0.0; na * n];
    for (r, h, c) in pieces(s, u) {
        let m = driver.slope(c);
        for (l, &(eta, _)) in atoms.iter().enumerate() {
            let w = (-eta * (tu - r)).exp() * h;
            for j in 0..n {
                inner[l * n + j] += w * m[j];
            }
        }
    }
    // outer[k][l][i] = ∫_u^t e^{-ξ_k(t-v)} a_{vu}(η_l) dx^i_v
    let mut outer = vec![0.0; na * na * n];
    for (v, h, c) in pieces(u, t) {
        let m = driver.slope(c);
        for (k, &(xi, _)) in atoms.iter().enumerate() {
            let decay = (-xi * (tt - v)).exp() * h;
            for (l, &(eta, _)) in atoms.iter().enumerate() {
                let w = decay * (-eta * (v - tu)).exp_m1();
                for i in 0..n {
                    outer[(k * na + l) * n + i] += w * m[i];
                }
            }
        }
    }
    let mut out = vec![0.0; na * n * n];
    for k in 0..na {
        for (l, &(_, wl)) in atoms.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    out[k * n * n + i * n + j] += wl * outer[(k * na + l) * n + i] * inner[l * n + j];
                }
            }
        }
    }
    Ok(out)
}

/// `∫_0^T e^{-ξ(T-v)} z(v) x'(v) dv` by adaptive Gauss-Legendre quadrature.
pub fn young_quadrature(xi: f64, horizon: f64, z: impl Fn(f64) -> f64, dx: impl Fn(f64) -> f64) -> Result<f64> {
    let r = integrate(|v| (-xi * (horizon - v)).exp() * z(v) * dx(v), 0.0, horizon, 1e-15, 1e-14);
    if !r.value.is_finite() {
        return invalid("oracle quadrature produced a non-finite value");
    }
    Ok(r.value)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::algebra::TimeGrid;
    use crate::lift::{sample_fbm, RoughLift};

    #[test]
    fn x3_direct_matches_the_chen_defect() {
        let grid = Arc::new(TimeGrid::uniform(1.0, 16).unwrap());
        let driver = Arc::new(sample_fbm(0.6, grid, 2, 3).unwrap());
        let measure = Arc::new(KernelMeasure::from_atoms(vec![(0.5, 1.0), (3.0, 0.5)]).unwrap());
        let lift = RoughLift::new(driver.clone(), measure.clone(), 0.55).unwrap();
        let direct = x3_direct(&driver, &measure, 2, 7, 15, 512).unwrap();
        for k in 0..2 {
            let chen = lift.x3_tilde(grid_time(&driver, 2), grid_time(&driver, 7), grid_time(&driver, 15), k).unwrap();
            for (a, b) in chen.iter().zip(&direct[k * 4..(k + 1) * 4]) {
                assert!((a - b).abs() < 1e-7 * b.abs().max(1e-3), "{a} vs {b}");
            }
        }
    }

    fn grid_time(d: &DriverPath, i: usize) -> f64 {
        d.grid().time(i)
    }

    #[test]
    fn young_quadrature_of_a_linear_driver() {
        let v = young_quadrature(1.0, 1.0, |v| v, |_| 1.0).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-14);
    }
}
