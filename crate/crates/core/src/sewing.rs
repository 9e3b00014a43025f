//! Dyadic sewing maps `Λ`, `Λ̃` and compensated Riemann sums.
//!
//! A germ is any function of two times `(s, t)`; sums over the level-`n`
//! dyadic partition of `[s, t]` converge, when `δ(germ)` has order `μ > 1`,
//! to `(id - Λδ) germ`. The twisted variants weight the cell starting at
//! `t_i` by `e^{-ξ(t - t_{i+1})}` and realize `(id - Λ̃δ̃)`.

use crate::algebra::{Increment2, LaplaceIncrement2, TimeGrid};
use crate::error::{invalid, Error, Result};

/// A vector-valued function of two times.
pub trait Germ: Sync {
    fn dim(&self) -> usize;

    /// Writes `g_{ts}` into `out` (length [`Germ::dim`]).
    fn eval(&self, s: f64, t: f64, out: &mut [f64]);

    /// Whether the germ can be evaluated with `t` as an endpoint.
    fn supports(&self, _t: f64) -> bool {
        true
    }
}

struct ScalarGerm<F>(F);

impl<F: Fn(f64, f64) -> f64 + Sync> Germ for ScalarGerm<F> {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, s: f64, t: f64, out: &mut [f64]) {
        out[0] = (self.0)(s, t);
    }
}

/// Wraps a scalar closure `(s, t) -> g_{ts}`.
pub fn scalar_germ(f: impl Fn(f64, f64) -> f64 + Sync) -> impl Germ {
    ScalarGerm(f)
}

struct VectorGerm<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64, f64, &mut [f64]) + Sync> Germ for VectorGerm<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, s: f64, t: f64, out: &mut [f64]) {
        (self.f)(s, t, out)
    }
}

/// Wraps a closure writing `dim` values of `g_{ts}` into its output slice.
pub fn vector_germ(dim: usize, f: impl Fn(f64, f64, &mut [f64]) + Sync) -> impl Germ {
    VectorGerm { dim, f }
}

/// A grid-indexed 2-increment used as a germ; only grid times are supported.
pub struct GridGerm<'a>(pub &'a Increment2);

impl Germ for GridGerm<'_> {
    fn dim(&self) -> usize {
        self.0.shape().len()
    }

    fn eval(&self, s: f64, t: f64, out: &mut [f64]) {
        let g = self.0.grid();
        let (i, j) = (g.locate(s).expect("germ time off grid"), g.locate(t).expect("germ time off grid"));
        out.copy_from_slice(&self.0.value(i, j));
    }

    fn supports(&self, t: f64) -> bool {
        self.0.grid().locate(t).is_some()
    }
}

/// One atom of a Laplace-indexed 2-increment used as a germ.
pub struct LaplaceGridGerm<'a> {
    pub increment: &'a LaplaceIncrement2,
    pub atom: usize,
}

impl LaplaceGridGerm<'_> {
    /// Frequency `ξ` of the selected atom.
    pub fn xi(&self) -> f64 {
        self.increment.measure().atoms()[self.atom].0
    }
}

impl Germ for LaplaceGridGerm<'_> {
    fn dim(&self) -> usize {
        self.increment.shape().len()
    }

    fn eval(&self, s: f64, t: f64, out: &mut [f64]) {
        let g = self.increment.grid();
        let (i, j) = (g.locate(s).expect("germ time off grid"), g.locate(t).expect("germ time off grid"));
        out.copy_from_slice(&self.increment.value(i, j, self.atom));
    }

    fn supports(&self, t: f64) -> bool {
        self.increment.grid().locate(t).is_some()
    }
}

/// Dyadic partitions of a base interval; level `n` has `2^n + 1` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicScheme {
    pub start: f64,
    pub end: f64,
    pub max_level: u32,
}

impl DyadicScheme {
    pub fn new(start: f64, end: f64, max_level: u32) -> Result<Self> {
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return invalid(format!("dyadic scheme needs start < end, got [{start}, {end}]"));
        }
        if max_level > 30 {
            return invalid(format!("max level {max_level} exceeds 30"));
        }
        Ok(Self { start, end, max_level })
    }

    fn check_level(&self, level: u32) -> Result<()> {
        if level > self.max_level {
            return invalid(format!("level {level} exceeds the configured maximum {}", self.max_level));
        }
        Ok(())
    }

    pub fn point(&self, level: u32, i: usize) -> f64 {
        let n = 1usize << level;
        if i == n {
            self.end
        } else {
            self.start + (self.end - self.start) * (i as f64 / n as f64)
        }
    }

    pub fn partition(&self, level: u32) -> Result<Vec<f64>> {
        self.check_level(level)?;
        Ok((0..=(1usize << level)).map(|i| self.point(level, i)).collect())
    }

    /// `{s} ∪ (π^n ∩ (s, t)) ∪ {t}`.
    pub fn restricted(&self, level: u32, s: f64, t: f64) -> Result<Vec<f64>> {
        self.check_level(level)?;
        if !(s <= t) || s < self.start || t > self.end {
            return invalid(format!("[{s}, {t}] is not inside [{}, {}]", self.start, self.end));
        }
        let mut out = vec![s];
        if s < t {
            let n = 1usize << level;
            let scale = n as f64 / (self.end - self.start);
            let first = (((s - self.start) * scale).floor() as usize).saturating_sub(1);
            for i in first..=n {
                let p = self.point(level, i);
                if p >= t {
                    break;
                }
                if p > s {
                    out.push(p);
                }
            }
            out.push(t);
        }
        Ok(out)
    }
}

/// Twisted Riemann sum `Σ_i e^{-ξ(t - t_{i+1})} g_{t_{i+1} t_i}` over `points`
/// (`t` is the last point), accumulated left to right.
fn twisted_sum(germ: &impl Germ, xi: f64, points: &[f64], acc: &mut [f64], scratch: &mut [f64]) {
    acc.iter_mut().for_each(|a| *a = 0.0);
    let t = *points.last().unwrap();
    for w in points.windows(2) {
        germ.eval(w[0], w[1], scratch);
        let weight = if xi == 0.0 { 1.0 } else { (-xi * (t - w[1])).exp() };
        for (a, g) in acc.iter_mut().zip(scratch.iter()) {
            *a += weight * g;
        }
    }
}

fn check_points(germ: &impl Germ, points: &[f64]) -> Result<()> {
    if let Some(p) = points.iter().find(|&&p| !germ.supports(p)) {
        return invalid(format!("germ cannot be evaluated at partition point {p}"));
    }
    Ok(())
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi >= 0.0) || !xi.is_finite() {
        return invalid(format!("Laplace frequency must be finite and >= 0, got {xi}"));
    }
    Ok(())
}

/// `M̃^n_{ts} = B̃_{ts} - Σ_i e^{-ξ(t - t_{i+1})} B̃_{t_{i+1} t_i}` over
/// `{s} ∪ (π^n ∩ (s,t)) ∪ {t}`. This is zero when no partition point falls
/// strictly inside `(s, t)` and `(δ̃B̃)_{t t_j s}` when exactly one does.
pub fn lambda_tilde_dyadic(b: &impl Germ, xi: f64, scheme: &DyadicScheme, s: f64, t: f64, level: u32) -> Result<Vec<f64>> {
    check_xi(xi)?;
    let points = scheme.restricted(level, s, t)?;
    check_points(b, &points)?;
    let d = b.dim();
    let mut out = vec![0.0; d];
    if points.len() <= 2 {
        return Ok(out);
    }
    let mut sum = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    twisted_sum(b, xi, &points, &mut sum, &mut scratch);
    b.eval(s, t, &mut out);
    for (o, x) in out.iter_mut().zip(&sum) {
        *o -= x;
    }
    Ok(out)
}

/// Untwisted `M^n_{ts}`.
pub fn lambda_dyadic(b: &impl Germ, scheme: &DyadicScheme, s: f64, t: f64, level: u32) -> Result<Vec<f64>> {
    lambda_tilde_dyadic(b, 0.0, scheme, s, t, level)
}

/// Stopping rules for [`compensated_sum_tilde`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SewingConfig {
    pub max_level: u32,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for SewingConfig {
    fn default() -> Self {
        Self { max_level: 14, abs_tol: 1e-12, rel_tol: 1e-10 }
    }
}

/// Level-by-level record of a compensated sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SewingDiagnostics {
    pub partial_sums: Vec<Vec<f64>>,
    /// `‖S_n - S_{n-1}‖` for `n = 1, 2, ...`.
    pub differences: Vec<f64>,
    /// One Richardson step on the last two levels.
    pub extrapolated: Vec<f64>,
    /// `‖d_L‖ / ‖d_{L-1}‖`, when defined.
    pub decay_ratio: Option<f64>,
    pub converged: bool,
}

impl SewingDiagnostics {
    pub fn final_level(&self) -> usize {
        self.partial_sums.len() - 1
    }

    /// Least-squares slope of `-log2 ‖d_n‖` against `n` over the last `window` nonzero differences.
    pub fn decay_exponent(&self, window: usize) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .differences
            .iter()
            .enumerate()
            .filter(|(_, d)| **d > 0.0)
            .map(|(i, d)| ((i + 1) as f64, -d.log2()))
            .collect();
        let pts = &pts[pts.len().saturating_sub(window)..];
        if pts.len() < 2 {
            return None;
        }
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(sxy / sxx)
    }
}

/// Raw sum at the final level plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SewingResult {
    pub value: Vec<f64>,
    pub diagnostics: SewingDiagnostics,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Twisted sum over the level-`level` dyadic partition of `[s, t]` itself.
pub fn riemann_sum_tilde(germ: &impl Germ, xi: f64, s: f64, t: f64, level: u32) -> Result<Vec<f64>> {
    check_xi(xi)?;
    let scheme = DyadicScheme::new(s, t, level)?;
    let points = scheme.partition(level)?;
    check_points(germ, &points)?;
    let mut acc = vec![0.0; germ.dim()];
    let mut scratch = vec![0.0; germ.dim()];
    twisted_sum(germ, xi, &points, &mut acc, &mut scratch);
    Ok(acc)
}

/// Untwisted [`riemann_sum_tilde`].
pub fn riemann_sum(germ: &impl Germ, s: f64, t: f64, level: u32) -> Result<Vec<f64>> {
    riemann_sum_tilde(germ, 0.0, s, t, level)
}

/// Twisted compensated sum with level refinement up to `config.max_level`.
///
/// Stops early when successive levels agree to `abs_tol` or `rel_tol`;
/// fails with [`Error::NotSewable`] when three consecutive level
/// differences fail to decrease.
pub fn compensated_sum_tilde(germ: &impl Germ, xi: f64, s: f64, t: f64, config: &SewingConfig) -> Result<SewingResult> {
    check_xi(xi)?;
    if !(s <= t) {
        return invalid(format!("compensated sum needs s <= t, got [{s}, {t}]"));
    }
    let d = germ.dim();
    if s == t {
        let zero = vec![0.0; d];
        return Ok(SewingResult {
            value: zero.clone(),
            diagnostics: SewingDiagnostics {
                partial_sums: vec![zero.clone()],
                differences: vec![],
                extrapolated: zero,
                decay_ratio: None,
                converged: true,
            },
        });
    }
    let mut partial_sums = vec![riemann_sum_tilde(germ, xi, s, t, 0)?];
    let mut differences: Vec<f64> = Vec::new();
    let mut signed_last = vec![0.0; d];
    let mut signed_prev = vec![0.0; d];
    let mut rising = 0;
    let mut converged = false;
    for level in 1..=config.max_level {
        let sum = riemann_sum_tilde(germ, xi, s, t, level)?;
        let prev = partial_sums.last().unwrap();
        let diff: Vec<f64> = sum.iter().zip(prev).map(|(a, b)| a - b).collect();
        let dn = norm(&diff);
        let scale = norm(&sum);
        partial_sums.push(sum);
        signed_prev = std::mem::replace(&mut signed_last, diff);
        if let Some(&last) = differences.last() {
            rising = if dn >= last { rising + 1 } else { 0 };
        }
        differences.push(dn);
        if dn <= config.abs_tol || dn <= config.rel_tol * scale {
            converged = true;
            break;
        }
        if rising >= 3 {
            return Err(Error::NotSewable { s, t, level: level as usize });
        }
    }
    let value = partial_sums.last().unwrap().clone();
    let mut decay_ratio = None;
    let mut extrapolated = value.clone();
    if differences.len() >= 2 {
        let (a, b) = (differences[differences.len() - 1], differences[differences.len() - 2]);
        if b > 0.0 {
            let q = a / b;
            decay_ratio = Some(q);
            if q < 1.0 {
                // Per-component signed ratio keeps the extrapolation sign-correct.
                for i in 0..d {
                    if signed_prev[i] != 0.0 {
                        let qi = signed_last[i] / signed_prev[i];
                        if qi.abs() < 1.0 {
                            extrapolated[i] += signed_last[i] * qi / (1.0 - qi);
                        }
                    }
                }
            }
        }
    }
    Ok(SewingResult { value, diagnostics: SewingDiagnostics { partial_sums, differences, extrapolated, decay_ratio, converged } })
}

/// Untwisted [`compensated_sum_tilde`].
pub fn compensated_sum(germ: &impl Germ, s: f64, t: f64, config: &SewingConfig) -> Result<SewingResult> {
    compensated_sum_tilde(germ, 0.0, s, t, config)
}

/// `c_μ = 2 + 2^μ Σ_{k≥1} k^{-μ}`.
///
/// The series is summed directly up to `K` and the remainder is taken from
/// the Euler–Maclaurin expansion; `K` doubles until the last correction
/// term is below `1e-10` of the total.
pub fn c_mu(mu: f64) -> Result<f64> {
    if !(mu > 1.0) || !mu.is_finite() {
        return invalid(format!("c_mu needs mu > 1, got {mu}"));
    }
    let mut k = 16usize;
    loop {
        let head: f64 = (1..k).map(|j| (j as f64).powf(-mu)).sum();
        let kf = k as f64;
        let tail = kf.powf(1.0 - mu) / (mu - 1.0) + 0.5 * kf.powf(-mu) + mu * kf.powf(-mu - 1.0) / 12.0;
        let next = mu * (mu + 1.0) * (mu + 2.0) * kf.powf(-mu - 3.0) / 720.0;
        let zeta = head + tail;
        if next <= 1e-10 * zeta || k >= 1 << 24 {
            return Ok(2.0 + 2f64.powf(mu) * zeta);
        }
        k *= 2;
    }
}

/// Outcome of [`sewing_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SewingBound {
    /// `sup_{s<t} ‖(Λ̃h)_{ts}‖_{L_β} / (t-s)^μ`.
    pub lhs: f64,
    /// `sup ‖h_{tus}‖_{L_β} / ((u-s)^ρ (t-u)^{μ-ρ})`.
    pub norm_h: f64,
    pub c_mu: f64,
    pub holds: bool,
}

/// Discrete form of the sewing estimate `‖Λ̃h‖_μ ≤ c_μ N[h]` with `h = δ̃B̃`.
///
/// `Λ̃h` on a pair of grid points is `B̃_{ts}` minus the twisted Riemann sum
/// over all grid points between them, i.e. the sewing map at the grid
/// resolution; every triple produced by the point-removal argument is then a
/// grid triple, so the inequality must hold exactly.
pub fn sewing_bound_check(b: &LaplaceIncrement2, beta: f64, mu: f64, rho: f64) -> Result<SewingBound> {
    if !(mu > 1.0) {
        return invalid(format!("sewing bound needs mu > 1, got {mu}"));
    }
    if !(rho > 0.0 && rho < mu) {
        return invalid(format!("sewing bound needs 0 < rho < mu, got rho = {rho}"));
    }
    let c = c_mu(mu)?;
    let grid: &TimeGrid = b.grid();
    let measure = b.measure();
    let factors = crate::algebra::lbeta_weights(measure, beta)?;
    let n = grid.len();
    let d = b.shape().len();
    let h = b.delta_tilde();

    let mut lhs = 0.0f64;
    for s in 0..n {
        // Running twisted sums for all t > s, one per atom.
        let mut sums = vec![vec![0.0; d]; measure.len()];
        for t in s + 1..n {
            let dt = grid.time(t) - grid.time(t - 1);
            let mut total = 0.0;
            for (k, &(xi, _)) in measure.atoms().iter().enumerate() {
                let decay = (-xi * dt).exp();
                let cell = b.value(t - 1, t, k);
                for (a, c) in sums[k].iter_mut().zip(&cell) {
                    *a = decay * *a + c;
                }
                let full = b.value(s, t, k);
                let m: Vec<f64> = full.iter().zip(&sums[k]).map(|(x, y)| x - y).collect();
                total += factors[k] * norm(&m);
            }
            lhs = lhs.max(total / (grid.time(t) - grid.time(s)).powf(mu));
        }
    }

    let mut norm_h = 0.0f64;
    for s in 0..n {
        for u in s + 1..n {
            for t in u + 1..n {
                let total: f64 = (0..measure.len()).map(|k| factors[k] * norm(&h.value(s, u, t, k))).sum();
                let den = (grid.time(u) - grid.time(s)).powf(rho) * (grid.time(t) - grid.time(u)).powf(mu - rho);
                norm_h = norm_h.max(total / den);
            }
        }
    }
    Ok(SewingBound { lhs, norm_h, c_mu: c, holds: lhs <= c * norm_h * (1.0 + 1e-12) + 1e-300 })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::algebra::Shape;
    use crate::laplace::KernelMeasure;

    #[test]
    fn c_mu_matches_slow_oracle() {
        // Brute-force partial sum with an integral tail bound as oracle.
        let mu = 1.5f64;
        let n = 2_000_000usize;
        let head: f64 = (1..=n).map(|k| (k as f64).powf(-mu)).sum();
        let nf = n as f64;
        let zeta = head + (nf + 0.5).powf(1.0 - mu) / (mu - 1.0);
        let oracle = 2.0 + 2f64.powf(mu) * zeta;
        let c = c_mu(mu).unwrap();
        assert!((c - oracle).abs() < 1e-9, "{c} vs {oracle}");
        assert!((c - 9.389).abs() < 1e-3);
        assert!(c_mu(1.0).is_err());
    }

    #[test]
    fn no_interior_points_gives_zero() {
        let scheme = DyadicScheme::new(0.0, 1.0, 6).unwrap();
        let g = scalar_germ(|s, t| (t - s).powi(2));
        assert_eq!(lambda_dyadic(&g, &scheme, 0.26, 0.49, 2).unwrap(), vec![0.0]);
        // One interior point: M = δB at (s, 0.5, t).
        let m = lambda_dyadic(&g, &scheme, 0.3, 0.7, 1).unwrap()[0];
        assert!((m - (0.16 - 0.04 - 0.04)).abs() < 1e-15);
    }

    #[test]
    fn additive_germ_has_zero_lambda() {
        let scheme = DyadicScheme::new(0.0, 1.0, 8).unwrap();
        let g = scalar_germ(|s, t| t.sin() - s.sin());
        for level in 0..=8 {
            assert!(lambda_dyadic(&g, &scheme, 0.1, 0.93, level).unwrap()[0].abs() < 1e-14);
        }
    }

    #[test]
    fn squared_germ_level_three_by_hand() {
        // Points 0, 1/8, ..., 1: B_{10} minus eight cells of width 1/8.
        let scheme = DyadicScheme::new(0.0, 1.0, 3).unwrap();
        let g = scalar_germ(|s, t| (t - s).powi(2));
        let m = lambda_dyadic(&g, &scheme, 0.0, 1.0, 3).unwrap()[0];
        assert!((m - (1.0 - 8.0 / 64.0)).abs() < 1e-15);
        // Off-dyadic endpoints: cells [0.2,0.25], 6 of width 1/8 ... up to [0.875,0.9].
        let m = lambda_dyadic(&g, &scheme, 0.2, 0.9, 3).unwrap()[0];
        let oracle = 0.49 - 0.05f64.powi(2) - 5.0 / 64.0 - 0.025f64.powi(2);
        assert!((m - oracle).abs() < 1e-15, "{m} vs {oracle}");
    }

    #[test]
    fn twisted_reduces_at_zero() {
        let scheme = DyadicScheme::new(0.0, 2.0, 5).unwrap();
        let g = scalar_germ(|s, t| (t - s).powf(1.7) * (1.0 + s));
        for level in 0..=5 {
            assert_eq!(
                lambda_tilde_dyadic(&g, 0.0, &scheme, 0.3, 1.9, level).unwrap(),
                lambda_dyadic(&g, &scheme, 0.3, 1.9, level).unwrap()
            );
        }
    }

    #[test]
    fn exact_twisted_increment_has_zero_lambda() {
        let xi = 1.3;
        let scheme = DyadicScheme::new(0.0, 1.0, 10).unwrap();
        let g = scalar_germ(move |s, t| (t * t).cos() - (-xi * (t - s)).exp() * (s * s).cos());
        for level in [0, 3, 10] {
            assert!(lambda_tilde_dyadic(&g, xi, &scheme, 0.05, 0.95, level).unwrap()[0].abs() < 1e-14);
        }
    }

    #[test]
    fn twisted_level_differences_decay() {
        let g = scalar_germ(|s, t| (t - s).powi(2) * (-(t - s)).exp());
        let cfg = SewingConfig { max_level: 10, abs_tol: 0.0, rel_tol: 0.0 };
        let r = compensated_sum_tilde(&g, 1.0, 0.0, 1.0, &cfg).unwrap();
        let rate = r.diagnostics.decay_exponent(8).unwrap();
        assert!((rate - 1.0).abs() < 0.2, "rate {rate}");
    }

    #[test]
    fn compensated_sum_examples() {
        let cfg = SewingConfig::default();
        let tele = scalar_germ(|s, t| t.exp() - s.exp());
        let r = compensated_sum(&tele, 0.0, 1.0, &cfg).unwrap();
        assert!((r.value[0] - (1f64.exp() - 1.0)).abs() < 1e-14);
        assert!(r.diagnostics.converged);

        let young = scalar_germ(|s, t| s * (t - s));
        let r = compensated_sum(&young, 0.0, 1.0, &cfg).unwrap();
        assert!((r.value[0] - 0.5).abs() < 1e-4);
        assert!((r.diagnostics.extrapolated[0] - 0.5).abs() < 1e-12);

        let sq = scalar_germ(|s, t| (t - s).powi(2));
        let r = compensated_sum(&sq, 0.0, 1.0, &cfg).unwrap();
        assert!((r.value[0] - 2f64.powi(-14)).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_tilde_examples() {
        let cfg = SewingConfig::default();
        let xi = 1.0;
        let x1 = move |s: f64, t: f64| (1.0 - (-xi * (t - s)).exp()) / xi;
        let g = scalar_germ(move |s, t| x1(s, t) * s);
        let r = compensated_sum_tilde(&g, xi, 0.0, 1.0, &cfg).unwrap();
        assert!((r.diagnostics.extrapolated[0] - (-1f64).exp()).abs() < 1e-8);
        assert!((r.value[0] - (-1f64).exp()).abs() < 1e-4);

        let c = scalar_germ(move |s, t| 2.5 * x1(s, t));
        for level in 0..6 {
            let v = riemann_sum_tilde(&c, xi, 0.0, 1.0, level).unwrap()[0];
            assert!((v - 2.5 * x1(0.0, 1.0)).abs() < 1e-14);
        }
        let plain = scalar_germ(|s, t| s * (t - s));
        assert_eq!(
            compensated_sum_tilde(&plain, 0.0, 0.0, 1.0, &cfg).unwrap(),
            compensated_sum(&plain, 0.0, 1.0, &cfg).unwrap()
        );
    }

    #[test]
    fn rough_germ_is_not_sewable() {
        let g = scalar_germ(|s, t| (t - s).powf(0.4));
        let err = compensated_sum(&g, 0.0, 1.0, &SewingConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NotSewable { .. }));
    }

    #[test]
    fn grid_germ_needs_grid_points() {
        let grid = Arc::new(TimeGrid::dyadic(1.0, 3).unwrap());
        let b = Increment2::from_time_fn(grid, Shape::scalar(), |s, t| vec![(t - s).powi(2)]);
        let scheme = DyadicScheme::new(0.0, 1.0, 4).unwrap();
        let m = lambda_dyadic(&GridGerm(&b), &scheme, 0.0, 1.0, 3).unwrap()[0];
        assert!((m - (1.0 - 8.0 / 64.0)).abs() < 1e-15);
        assert!(lambda_dyadic(&GridGerm(&b), &scheme, 0.0, 1.0, 4).is_err());
    }

    #[test]
    fn zero_germ_bound_is_trivial() {
        let grid = Arc::new(TimeGrid::uniform(1.0, 6).unwrap());
        let m = Arc::new(KernelMeasure::from_atoms(vec![(0.0, 1.0), (2.0, 0.5)]).unwrap());
        let b = LaplaceIncrement2::from_time_fn(grid, m, Shape::scalar(), |_, _, _| vec![0.0]);
        let r = sewing_bound_check(&b, 1.0, 1.5, 0.75).unwrap();
        assert_eq!((r.lhs, r.norm_h), (0.0, 0.0));
        assert!(r.holds);
        assert!(sewing_bound_check(&b, 1.0, 1.0, 0.5).is_err());
    }
}
