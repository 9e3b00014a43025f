use rayon::prelude::*;

use super::increment::{Increment2, Increment3};
use crate::error::{invalid, shape, Result};
use crate::laplace::KernelMeasure;

/// A Hölder-type supremum together with the grid indices attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderNorm {
    pub value: f64,
    pub argmax: (usize, usize),
}

pub(crate) fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `max_{s<t} ‖f_{ts}‖ / (t-s)^μ` over all grid pairs.
pub fn holder_norm2(f: &Increment2, mu: f64) -> Result<HolderNorm> {
    if !(mu > 0.0) {
        return invalid(format!("Hölder exponent must be positive, got {mu}"));
    }
    let grid = f.grid().clone();
    let n = grid.len();
    let best = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut best = HolderNorm { value: 0.0, argmax: (0, n - 1) };
            for t in s + 1..n {
                let r = euclid(&f.value(s, t)) / (grid.time(t) - grid.time(s)).powf(mu);
                if r > best.value {
                    best = HolderNorm { value: r, argmax: (s, t) };
                }
            }
            best
        })
        .reduce(
            || HolderNorm { value: 0.0, argmax: (0, n - 1) },
            |a, b| if b.value > a.value { b } else { a },
        );
    Ok(best)
}

/// `max ‖h_{tus}‖ / ((u-s)^γ (t-u)^ρ)` over all non-degenerate grid triples.
///
/// This is the two-exponent norm; it dominates the infimum-over-decompositions
/// norm, so bounds stated with the latter are checked conservatively.
pub fn holder_norm3(h: &Increment3, gamma: f64, rho: f64) -> Result<f64> {
    if !(gamma > 0.0 && rho > 0.0) {
        return invalid(format!("exponents must be positive, got ({gamma}, {rho})"));
    }
    let grid = h.grid().clone();
    let n = grid.len();
    let best = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut best = 0.0f64;
            for u in s + 1..n {
                let a = (grid.time(u) - grid.time(s)).powf(gamma);
                for t in u + 1..n {
                    let b = (grid.time(t) - grid.time(u)).powf(rho);
                    best = best.max(euclid(&h.value(s, u, t)) / (a * b));
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Per-atom factors `|w_k| (1 + ξ_k^β)` of the discrete `L_β` norm.
pub fn lbeta_weights(measure: &KernelMeasure, beta: f64) -> Result<Vec<f64>> {
    if !(beta >= 0.0) {
        return invalid(format!("β must be >= 0, got {beta}"));
    }
    Ok(measure.atoms().iter().map(|&(xi, w)| w.abs() * (1.0 + xi.powf(beta))).collect())
}

/// `Σ_k |w_k| (1 + ξ_k^β) ‖g̃(ξ_k)‖` where `values` holds one block of
/// `values.len() / measure.len()` entries per atom.
pub fn lbeta_norm(values: &[f64], measure: &KernelMeasure, beta: f64) -> Result<f64> {
    let factors = lbeta_weights(measure, beta)?;
    if measure.is_empty() {
        return if values.is_empty() { Ok(0.0) } else { shape("values given for an empty measure") };
    }
    if values.len() % measure.len() != 0 {
        return shape(format!("{} values do not split over {} atoms", values.len(), measure.len()));
    }
    let d = values.len() / measure.len();
    Ok(factors.iter().zip(values.chunks(d.max(1))).map(|(f, v)| f * euclid(v)).sum())
}
