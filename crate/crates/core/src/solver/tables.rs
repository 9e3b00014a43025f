//! Per-sub-cell lift data on the solver's fine mesh.
//!
//! Every driver cell is split into `2^L` equal sub-cells. On a sub-cell of
//! width `h` and slope `m` the lift starting at its left end is
//! `x̃¹ = m g_ξ(h)` and `x̃²_{ab} = m_a m_b Σ_l w_l F_{ξ η_l}(h)`.

use std::collections::HashMap;

use crate::error::{invalid, Result};
use crate::laplace::KernelMeasure;
use crate::lift::expint::{decay_integral, exp_int2};
use crate::lift::DriverPath;

pub(crate) struct Tables {
    pub times: Vec<f64>,
    /// Sub-cells per driver cell.
    pub stride: usize,
    pub n: usize,
    pub xi: Vec<f64>,
    pub w: Vec<f64>,
    /// `|w_k| (1 + ξ_k^β)`.
    pub lbeta: Vec<f64>,
    /// `e^{-ξ_k h_j}`, laid out `[atom][sub-cell]`.
    pub decay: Vec<f64>,
    /// `[atom][sub-cell][n]`.
    pub x1: Vec<f64>,
    /// `[atom][sub-cell][n][n]`; empty for first-order tables.
    pub x2: Vec<f64>,
}

impl Tables {
    pub fn atoms(&self) -> usize {
        self.xi.len()
    }

    pub fn cells(&self) -> usize {
        self.times.len() - 1
    }
}

fn fine_nodes(driver: &DriverPath, level: u32) -> Result<(Vec<f64>, usize)> {
    if level > 20 {
        return invalid(format!("sewing level {level} exceeds 20"));
    }
    let stride = 1usize << level;
    let pts = driver.grid().points();
    let mut times = Vec::with_capacity((pts.len() - 1) * stride + 1);
    for c in 0..pts.len() - 1 {
        let (a, b) = (pts[c], pts[c + 1]);
        let h = (b - a) / stride as f64;
        times.extend((0..stride).map(|i| a + i as f64 * h));
    }
    times.push(*pts.last().unwrap());
    Ok((times, stride))
}

fn lbeta_of(atoms: &[(f64, f64)], beta: f64) -> Vec<f64> {
    atoms.iter().map(|&(xi, w)| w.abs() * (1.0 + xi.powf(beta))).collect()
}

/// Tables for the Laplace system of `measure`.
pub(crate) fn laplace_tables(
    driver: &DriverPath,
    measure: &KernelMeasure,
    level: u32,
    beta: f64,
    second_order: bool,
) -> Result<Tables> {
    let (times, stride) = fine_nodes(driver, level)?;
    let atoms = measure.atoms();
    let (na, n, m) = (atoms.len(), driver.dims(), times.len() - 1);
    let mut decay = vec![0.0; na * m];
    let mut x1 = vec![0.0; na * m * n];
    let mut x2 = if second_order { vec![0.0; na * m * n * n] } else { Vec::new() };
    // Σ_l w_l F_{ξ_k η_l}(h) depends on h only; uniform sub-cells repeat widths.
    let mut inner: HashMap<u64, Vec<f64>> = HashMap::new();
    for j in 0..m {
        let h = times[j + 1] - times[j];
        let slope = driver.slope(j / stride);
        for (k, &(xi, _)) in atoms.iter().enumerate() {
            decay[k * m + j] = (-xi * h).exp();
            let g = decay_integral(xi, h);
            for a in 0..n {
                x1[(k * m + j) * n + a] = slope[a] * g;
            }
        }
        if second_order {
            let s = inner.entry(h.to_bits()).or_insert_with(|| {
                atoms
                    .iter()
                    .map(|&(xi, _)| atoms.iter().fold(0.0, |acc, &(eta, w)| acc + w * exp_int2(xi, eta, h)))
                    .collect()
            });
            for k in 0..na {
                let base = (k * m + j) * n * n;
                for a in 0..n {
                    for b in 0..n {
                        x2[base + a * n + b] = (slope[a] * slope[b]) * s[k];
                    }
                }
            }
        }
    }
    Ok(Tables { times, stride, n, xi: atoms.iter().map(|a| a.0).collect(), w: atoms.iter().map(|a| a.1).collect(), lbeta: lbeta_of(atoms, beta), decay, x1, x2 })
}

/// Classical increment and Lévy-area tables of `dy = dx σ(y)`, seen as a
/// single atom at `ξ = 0` with unit weight.
pub(crate) fn classical_tables(driver: &DriverPath, level: u32, beta: f64) -> Result<Tables> {
    let (times, stride) = fine_nodes(driver, level)?;
    let (n, m) = (driver.dims(), times.len() - 1);
    let mut x1 = vec![0.0; m * n];
    let mut x2 = vec![0.0; m * n * n];
    for j in 0..m {
        let h = times[j + 1] - times[j];
        let slope = driver.slope(j / stride);
        for a in 0..n {
            x1[j * n + a] = slope[a] * h;
            for b in 0..n {
                x2[(j * n + a) * n + b] = (slope[a] * slope[b]) * ((h * h) * 0.5);
            }
        }
    }
    Ok(Tables { times, stride, n, xi: vec![0.0], w: vec![1.0], lbeta: lbeta_of(&[(0.0, 1.0)], beta), decay: vec![1.0; m], x1, x2 })
}
