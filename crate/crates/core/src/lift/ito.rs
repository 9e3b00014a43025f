use super::driver::{DriverKind, DriverPath};
use super::expint::decay_integral;
use crate::error::{invalid, Result};
use crate::laplace::KernelMeasure;

/// Left-point approximation of the Itô `x̃²_{ts}(ξ_k)` for a Brownian driver.
///
/// `[s, t]` is cut into `refinement` equal steps whose endpoints must be grid
/// points; the integrand `x¹_{vs}` is frozen at the left end of each step
/// (computed from the linear interpolation of the step endpoints) and the
/// kernel weight `e^{-ξ(t - v)}` likewise.
pub fn lift_ito_x2(
    driver: &DriverPath,
    measure: &KernelMeasure,
    s: f64,
    t: f64,
    k: usize,
    refinement: usize,
) -> Result<Vec<f64>> {
    if driver.kind() != DriverKind::Brownian {
        return invalid(format!("the Itô lift needs a Brownian driver, got {:?}", driver.kind()));
    }
    if k >= measure.len() {
        return invalid(format!("atom {k} out of range"));
    }
    if refinement == 0 {
        return invalid("refinement must be positive");
    }
    let grid = driver.grid();
    let (Some(si), Some(ti)) = (grid.locate(s), grid.locate(t)) else {
        return invalid(format!("[{s}, {t}] endpoints must be grid points"));
    };
    if ti < si || (ti - si) % refinement != 0 {
        return invalid(format!("{} cells between s and t are not divisible by {refinement}", ti.saturating_sub(si)));
    }
    let stride = (ti - si) / refinement;
    let n = driver.dims();
    let atoms = measure.atoms();
    let xi = atoms[k].0;
    let mut run = vec![0.0; atoms.len() * n];
    let mut inner = vec![0.0; n];
    let mut out = vec![0.0; n * n];
    for j in 0..refinement {
        let (a, b) = (si + j * stride, si + (j + 1) * stride);
        let (ta, tb) = (grid.time(a), grid.time(b));
        let h = tb - ta;
        let dx: Vec<f64> = driver.value(b).iter().zip(driver.value(a)).map(|(p, q)| p - q).collect();
        inner.iter_mut().for_each(|v| *v = 0.0);
        for (l, &(_, w)) in atoms.iter().enumerate() {
            for c in 0..n {
                inner[c] += w * run[l * n + c];
            }
        }
        let weight = (-xi * (t - ta)).exp();
        for r in 0..n {
            for c in 0..n {
                out[r * n + c] += weight * dx[r] * inner[c];
            }
        }
        for (l, &(eta, _)) in atoms.iter().enumerate() {
            let decay = (-eta * h).exp();
            let g = decay_integral(eta, h) / h;
            for c in 0..n {
                run[l * n + c] = decay * run[l * n + c] + dx[c] * g;
            }
        }
    }
    Ok(out)
}
