use std::sync::Arc;

use super::sigma::SigmaField;
use crate::algebra::{Shape, TimeGrid};
use crate::error::{invalid, shape, Result};
use crate::laplace::KernelMeasure;
use crate::lift::RoughLift;

/// A path `y` on a grid with Gubinelli derivative `ζ` relative to `x¹`.
///
/// Values have shape `p x q`; `ζ_t` is `n x (p q)` so that
/// `δy_{ts} ≈ x¹_{ts} ζ_s` with `x¹` a `1 x n` row.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlledPath {
    grid: Arc<TimeGrid>,
    shape: Shape,
    n: usize,
    values: Vec<f64>,
    zeta: Vec<f64>,
    kappa: f64,
}

impl ControlledPath {
    pub fn new(grid: Arc<TimeGrid>, shape: Shape, n: usize, values: Vec<f64>, zeta: Vec<f64>, kappa: f64) -> Result<Self> {
        let len = shape.len();
        if values.len() != grid.len() * len || zeta.len() != grid.len() * n * len {
            return self::shape(format!(
                "controlled path on {} points needs {} values and {} derivative entries",
                grid.len(),
                grid.len() * len,
                grid.len() * n * len
            ));
        }
        if !(kappa > 0.0 && kappa <= 1.0) {
            return invalid(format!("regularity κ must lie in (0, 1], got {kappa}"));
        }
        Ok(Self { grid, shape, n, values, zeta, kappa })
    }

    /// Samples `t -> (y_t, ζ_t)` on every grid point.
    pub fn from_fn(
        grid: Arc<TimeGrid>,
        shape: Shape,
        n: usize,
        kappa: f64,
        f: impl Fn(f64) -> (Vec<f64>, Vec<f64>),
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len() * shape.len());
        let mut zeta = Vec::with_capacity(grid.len() * n * shape.len());
        for &t in grid.points() {
            let (y, z) = f(t);
            values.extend(y);
            zeta.extend(z);
        }
        Self::new(grid, shape, n, values, zeta, kappa)
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Driver dimension `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn value(&self, i: usize) -> &[f64] {
        let len = self.shape.len();
        &self.values[i * len..(i + 1) * len]
    }

    pub fn zeta(&self, i: usize) -> &[f64] {
        let len = self.n * self.shape.len();
        &self.zeta[i * len..(i + 1) * len]
    }

    /// Grid index of `t`, or an error when `t` is not a grid point.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        match self.grid.locate(t) {
            Some(i) => Ok(i),
            None => invalid(format!("time {t} is not a point of the controlled path's grid")),
        }
    }

    /// `r_{ts} = δy_{ts} - x¹_{ts} ζ_s` for grid indices `s <= t`.
    pub fn remainder(&self, lift: &RoughLift, s: usize, t: usize) -> Result<Vec<f64>> {
        if lift.dims() != self.n {
            return shape(format!("lift has {} components, path derivative expects {}", lift.dims(), self.n));
        }
        let x1 = lift.x1(self.grid.time(s), self.grid.time(t))?;
        let (ys, yt, zs) = (self.value(s), self.value(t), self.zeta(s));
        let len = self.shape.len();
        Ok((0..len)
            .map(|e| {
                let drift: f64 = (0..self.n).map(|b| x1[b] * zs[b * len + e]).sum();
                yt[e] - ys[e] - drift
            })
            .collect())
    }

    /// Discrete `2κ`-Hölder norm of the remainder over all grid pairs.
    pub fn remainder_norm(&self, lift: &RoughLift) -> Result<f64> {
        let mut best = 0.0f64;
        for s in 0..self.grid.len() {
            for t in s + 1..self.grid.len() {
                let r = self.remainder(lift, s, t)?;
                let dt = self.grid.time(t) - self.grid.time(s);
                best = best.max(crate::algebra::euclid(&r) / dt.powf(2.0 * self.kappa));
            }
        }
        Ok(best)
    }
}

/// `ẑ = σ(z)` with `ζ̂_s = ζ_s (Dσ(z_s))*`.
///
/// `z` must be a `1 x d` path; the output has shape `n_σ x d`.
pub fn compose_sigma(z: &ControlledPath, sigma: &SigmaField) -> Result<ControlledPath> {
    let d = sigma.d();
    if z.shape() != Shape::new(1, d) {
        return shape(format!("σ expects a 1x{d} path, got {}x{}", z.shape().rows, z.shape().cols));
    }
    let (n_drv, n_out) = (z.n(), sigma.n());
    let out_len = n_out * d;
    let mut values = Vec::with_capacity(z.grid().len() * out_len);
    let mut zeta = Vec::with_capacity(z.grid().len() * n_drv * out_len);
    for i in 0..z.grid().len() {
        let y = z.value(i);
        values.extend(sigma.eval(y));
        let jac = sigma.jacobian(y);
        let zi = z.zeta(i);
        for b in 0..n_drv {
            for p in 0..out_len {
                zeta.push((0..d).map(|m| zi[b * d + m] * jac[p * d + m]).sum());
            }
        }
    }
    ControlledPath::new(z.grid().clone(), Shape::new(n_out, d), n_drv, values, zeta, z.kappa())
}

/// `ỹ` on a grid, one `1 x d` row per atom, sharing the derivative `ζ` (`n x d`).
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceControlledPath {
    grid: Arc<TimeGrid>,
    measure: Arc<KernelMeasure>,
    d: usize,
    n: usize,
    ytilde: Vec<f64>,
    zeta: Vec<f64>,
}

impl LaplaceControlledPath {
    /// `ytilde` is laid out `[point][atom][d]`, `zeta` as `[point][n][d]`.
    pub fn new(
        grid: Arc<TimeGrid>,
        measure: Arc<KernelMeasure>,
        d: usize,
        n: usize,
        ytilde: Vec<f64>,
        zeta: Vec<f64>,
    ) -> Result<Self> {
        let (np, k) = (grid.len(), measure.len());
        if ytilde.len() != np * k * d || zeta.len() != np * n * d {
            return shape(format!("Laplace controlled path on {np} points x {k} atoms has inconsistent buffers"));
        }
        Ok(Self { grid, measure, d, n, ytilde, zeta })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn measure(&self) -> &Arc<KernelMeasure> {
        &self.measure
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `ỹ_{t_i}(ξ_k)`.
    pub fn value(&self, i: usize, k: usize) -> &[f64] {
        let at = (i * self.measure.len() + k) * self.d;
        &self.ytilde[at..at + self.d]
    }

    /// All atoms at point `i`, laid out `[atom][d]`.
    pub fn values_at(&self, i: usize) -> &[f64] {
        let len = self.measure.len() * self.d;
        &self.ytilde[i * len..(i + 1) * len]
    }

    pub fn zeta(&self, i: usize) -> &[f64] {
        let len = self.n * self.d;
        &self.zeta[i * len..(i + 1) * len]
    }

    /// `r̃_{ts}(ξ_k) = δ̃ỹ_{ts}(ξ_k) - x̃¹_{ts}(ξ_k) ζ_s` for grid indices `s <= t`.
    pub fn twisted_remainder(&self, lift: &RoughLift, s: usize, t: usize, k: usize) -> Result<Vec<f64>> {
        if lift.measure().atoms() != self.measure.atoms() {
            return invalid("lift and path use different kernel measures");
        }
        let (ts, tt) = (self.grid.time(s), self.grid.time(t));
        let x1 = lift.x1_tilde(ts, tt, k)?;
        let xi = self.measure.atoms()[k].0;
        let decay = (-xi * (tt - ts)).exp();
        let (ys, yt, zs) = (self.value(s, k), self.value(t, k), self.zeta(s));
        Ok((0..self.d)
            .map(|l| {
                let drift: f64 = (0..self.n).map(|b| x1[b] * zs[b * self.d + l]).sum();
                yt[l] - decay * ys[l] - drift
            })
            .collect())
    }
}

/// Output of [`project_y`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPath {
    pub grid: Arc<TimeGrid>,
    /// `y_{t_i}`, laid out `[point][d]`.
    pub values: Vec<f64>,
    /// `f_{t_{i+1} t_i} = Σ_k w_k a_{t_{i+1} t_i}(ξ_k) ỹ_{t_i}(ξ_k)`, one row per cell.
    ///
    /// Together with `Σ_k w_k δ̃ỹ(ξ_k)` it reproduces `δy` on each cell.
    pub drift: Vec<f64>,
}

/// `y_t = a + Σ_k w_k ỹ_t(ξ_k)`.
pub fn project_y(path: &LaplaceControlledPath, measure: &KernelMeasure, a: &[f64]) -> Result<ProjectedPath> {
    if path.measure().atoms() != measure.atoms() {
        return invalid("ỹ was built on a different set of atoms");
    }
    let d = path.d();
    if a.len() != d {
        return shape(format!("initial value has {} entries, expected {d}", a.len()));
    }
    let grid = path.grid().clone();
    let mut values = Vec::with_capacity(grid.len() * d);
    for i in 0..grid.len() {
        let mut y = a.to_vec();
        for (k, &(_, w)) in measure.atoms().iter().enumerate() {
            for (yl, v) in y.iter_mut().zip(path.value(i, k)) {
                *yl += w * v;
            }
        }
        values.extend(y);
    }
    let mut drift = Vec::with_capacity(grid.cells() * d);
    for i in 0..grid.cells() {
        let dt = grid.time(i + 1) - grid.time(i);
        let mut f = vec![0.0; d];
        for (k, &(xi, w)) in measure.atoms().iter().enumerate() {
            let twist = (-xi * dt).exp_m1();
            for (fl, v) in f.iter_mut().zip(path.value(i, k)) {
                *fl += w * twist * v;
            }
        }
        drift.extend(f);
    }
    Ok(ProjectedPath { grid, values, drift })
}
