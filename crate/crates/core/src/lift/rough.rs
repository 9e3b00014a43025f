use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::driver::DriverPath;
use super::expint::{decay_integral, exp_int, exp_int2};
use crate::algebra::{LaplaceIncrement2, Shape};
use crate::error::{invalid, Result};
use crate::laplace::KernelMeasure;

/// Which lift hypotheses the data is claimed to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hypotheses {
    /// `x̃¹` exists with `δ̃x̃¹ = 0`.
    pub first_order: bool,
    /// `x¹` is the kernel projection of `x̃¹`.
    pub projected: bool,
    /// `x̃²`, `x̃³` exist and satisfy the Chen relation.
    pub second_order: bool,
}

impl Hypotheses {
    pub const ALL: Hypotheses = Hypotheses { first_order: true, projected: true, second_order: true };
}

/// Exact convolutional lift of a piecewise-linear driver.
///
/// All quantities are computed by walking the driver cells between the two
/// endpoints, so arbitrary (off-grid) times are supported. Matrix-valued
/// objects are `n x n` row-major with entry `(i, j)` integrating `dx^i`
/// against the `j`-th component of the inner integral.
pub struct RoughLift {
    driver: Arc<DriverPath>,
    measure: Arc<KernelMeasure>,
    gamma: f64,
    hypotheses: Hypotheses,
    x2_cache: Mutex<HashMap<(u64, u64), Arc<Vec<f64>>>>,
}

impl std::fmt::Debug for RoughLift {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RoughLift")
            .field("dims", &self.driver.dims())
            .field("cells", &self.driver.grid().cells())
            .field("atoms", &self.measure.len())
            .field("gamma", &self.gamma)
            .finish()
    }
}

impl RoughLift {
    /// `gamma` is the declared Hölder regularity of the driver, in `(1/3, 1]`.
    pub fn new(driver: Arc<DriverPath>, measure: Arc<KernelMeasure>, gamma: f64) -> Result<Self> {
        if !(gamma > 1.0 / 3.0 && gamma <= 1.0) {
            return invalid(format!("declared regularity must lie in (1/3, 1], got {gamma}"));
        }
        if measure.is_empty() {
            return invalid("the kernel measure has no atoms");
        }
        Ok(Self { driver, measure, gamma, hypotheses: Hypotheses::ALL, x2_cache: Mutex::new(HashMap::new()) })
    }

    /// Restricts the claimed hypotheses (used to exercise the solvers' flag checks).
    pub fn with_hypotheses(mut self, hypotheses: Hypotheses) -> Self {
        self.hypotheses = hypotheses;
        self
    }

    pub fn driver(&self) -> &Arc<DriverPath> {
        &self.driver
    }

    pub fn measure(&self) -> &Arc<KernelMeasure> {
        &self.measure
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn hypotheses(&self) -> Hypotheses {
        self.hypotheses
    }

    pub fn dims(&self) -> usize {
        self.driver.dims()
    }

    fn check_pair(&self, s: f64, t: f64) -> Result<()> {
        let horizon = self.driver.grid().horizon();
        if !(0.0 <= s && s <= t && t <= horizon) {
            return invalid(format!("need 0 <= s <= t <= {horizon}, got s = {s}, t = {t}"));
        }
        Ok(())
    }

    fn check_atom(&self, k: usize) -> Result<()> {
        if k >= self.measure.len() {
            return invalid(format!("atom {k} out of range ({} atoms)", self.measure.len()));
        }
        Ok(())
    }

    /// `x̃¹_{ts}(ξ_k)` for every atom, laid out `[atom][component]`.
    pub fn x1_tilde_all(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        self.check_pair(s, t)?;
        let n = self.dims();
        let mut acc = vec![0.0; self.measure.len() * n];
        self.driver.for_each_piece(s, t, |a, b, c| {
            let h = b - a;
            let m = self.driver.slope(c);
            for (k, &(xi, _)) in self.measure.atoms().iter().enumerate() {
                let decay = (-xi * h).exp();
                let g = decay_integral(xi, h);
                for (x, mj) in acc[k * n..(k + 1) * n].iter_mut().zip(m) {
                    *x = decay * *x + mj * g;
                }
            }
        });
        Ok(acc)
    }

    /// `x̃¹_{ts}(ξ_k) = ∫_s^t e^{-ξ_k(t-v)} dx_v`.
    pub fn x1_tilde(&self, s: f64, t: f64, k: usize) -> Result<Vec<f64>> {
        self.check_atom(k)?;
        let n = self.dims();
        Ok(self.x1_tilde_all(s, t)?[k * n..(k + 1) * n].to_vec())
    }

    /// `x¹_{ts} = Σ_k w_k x̃¹_{ts}(ξ_k)`.
    pub fn x1(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        self.measure.project(&self.x1_tilde_all(s, t)?)
    }

    /// `x̃²_{ts}(ξ_k)` for every atom, laid out `[atom][i][j]`; memoized per pair.
    pub fn x2_tilde_all(&self, s: f64, t: f64) -> Result<Arc<Vec<f64>>> {
        self.check_pair(s, t)?;
        let key = (s.to_bits(), t.to_bits());
        if let Some(v) = self.x2_cache.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let v = Arc::new(self.x2_walk(s, t));
        self.x2_cache.lock().unwrap().entry(key).or_insert_with(|| v.clone());
        Ok(v)
    }

    fn x2_walk(&self, s: f64, t: f64) -> Vec<f64> {
        let n = self.dims();
        let nn = n * n;
        let atoms = self.measure.atoms();
        let na = atoms.len();
        let mut acc = vec![0.0; na * nn];
        // Running x̃¹_{a s}(η_l) at the left end of the current piece.
        let mut run = vec![0.0; na * n];
        let mut e = vec![0.0; na * na];
        let mut f = vec![0.0; na * na];
        let mut inner = vec![0.0; n];
        self.driver.for_each_piece(s, t, |a, b, c| {
            let h = b - a;
            let m = self.driver.slope(c);
            for (k, &(xi, _)) in atoms.iter().enumerate() {
                for (l, &(eta, _)) in atoms.iter().enumerate() {
                    e[k * na + l] = exp_int(xi, eta, h);
                    f[k * na + l] = exp_int2(xi, eta, h);
                }
            }
            for (k, &(xi, _)) in atoms.iter().enumerate() {
                // inner_j = Σ_l w_l (X_l[j] E_kl + m_j F_kl)
                inner.iter_mut().for_each(|v| *v = 0.0);
                for (l, &(_, w)) in atoms.iter().enumerate() {
                    let (ekl, fkl) = (e[k * na + l], f[k * na + l]);
                    for j in 0..n {
                        inner[j] += w * (run[l * n + j] * ekl + m[j] * fkl);
                    }
                }
                let decay = (-xi * h).exp();
                let block = &mut acc[k * nn..(k + 1) * nn];
                for i in 0..n {
                    for j in 0..n {
                        block[i * n + j] = decay * block[i * n + j] + m[i] * inner[j];
                    }
                }
            }
            for (l, &(eta, _)) in atoms.iter().enumerate() {
                let decay = (-eta * h).exp();
                let g = decay_integral(eta, h);
                for j in 0..n {
                    run[l * n + j] = decay * run[l * n + j] + m[j] * g;
                }
            }
        });
        acc
    }

    /// `x̃²_{ts}(ξ_k) = ∫_s^t e^{-ξ_k(t-v)} dx_v ⊗ x¹_{vs}`.
    pub fn x2_tilde(&self, s: f64, t: f64, k: usize) -> Result<Vec<f64>> {
        self.check_atom(k)?;
        let nn = self.dims() * self.dims();
        Ok(self.x2_tilde_all(s, t)?[k * nn..(k + 1) * nn].to_vec())
    }

    /// `x̃³_{tus}(ξ_k) = (δ̃x̃²)_{tus}(ξ_k) - x̃¹_{tu}(ξ_k) ⊗ x¹_{us}`.
    pub fn x3_tilde(&self, s: f64, u: f64, t: f64, k: usize) -> Result<Vec<f64>> {
        self.check_atom(k)?;
        if !(s <= u && u <= t) {
            return invalid(format!("need s <= u <= t, got ({s}, {u}, {t})"));
        }
        let n = self.dims();
        let nn = n * n;
        if s == u || u == t {
            return Ok(vec![0.0; nn]);
        }
        let xi = self.measure.atoms()[k].0;
        let ts = self.x2_tilde(s, t, k)?;
        let tu = self.x2_tilde(u, t, k)?;
        let us = self.x2_tilde(s, u, k)?;
        let x1t = self.x1_tilde(u, t, k)?;
        let x1p = self.x1(s, u)?;
        let decay = (-xi * (t - u)).exp();
        let mut out = vec![0.0; nn];
        for i in 0..n {
            for j in 0..n {
                let p = i * n + j;
                out[p] = ts[p] - tu[p] - decay * us[p] - x1t[i] * x1p[j];
            }
        }
        Ok(out)
    }

    /// `X̿⁴_{ts}(ξ_k, η_l) = ∫_s^t e^{-ξ_k(t-v)} a_{vs}(η_l) dx_v`.
    pub fn x4_double_tilde(&self, s: f64, t: f64, k: usize, l: usize) -> Result<Vec<f64>> {
        self.check_pair(s, t)?;
        self.check_atom(k)?;
        self.check_atom(l)?;
        let (xi, eta) = (self.measure.atoms()[k].0, self.measure.atoms()[l].0);
        let mut acc = vec![0.0; self.dims()];
        self.driver.for_each_piece(s, t, |a, b, c| {
            let h = b - a;
            let m = self.driver.slope(c);
            let decay = (-xi * h).exp();
            let weight = (-eta * (a - s)).exp() * exp_int(xi, eta, h) - decay_integral(xi, h);
            for (x, mj) in acc.iter_mut().zip(m) {
                *x = decay * *x + mj * weight;
            }
        });
        Ok(acc)
    }

    /// Plain increment `x_t - x_s`.
    pub fn increment(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        self.check_pair(s, t)?;
        let a = self.driver.value_at(s);
        Ok(self.driver.value_at(t).iter().zip(&a).map(|(x, y)| x - y).collect())
    }

    /// Classical iterated integral `∫_s^t dx_v ⊗ (x_v - x_s)`.
    pub fn area(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        self.check_pair(s, t)?;
        let n = self.dims();
        let mut acc = vec![0.0; n * n];
        let mut run = vec![0.0; n];
        self.driver.for_each_piece(s, t, |a, b, c| {
            let h = b - a;
            let m = self.driver.slope(c);
            for i in 0..n {
                for j in 0..n {
                    acc[i * n + j] += m[i] * run[j] * h + (m[i] * m[j]) * ((h * h) * 0.5);
                }
            }
            for j in 0..n {
                run[j] += m[j] * h;
            }
        });
        Ok(acc)
    }

    /// `x̃¹` as a Laplace-indexed 2-increment on the driver grid.
    pub fn x1_tilde_increment(self: &Arc<Self>) -> LaplaceIncrement2 {
        let lift = self.clone();
        let grid = self.driver.grid().clone();
        let n = self.dims();
        LaplaceIncrement2::from_fn(grid.clone(), self.measure.clone(), Shape::new(1, n), move |s, t, k| {
            lift.x1_tilde(grid.time(s), grid.time(t), k).expect("grid pair")
        })
    }

    /// `x̃²` as a Laplace-indexed 2-increment on the driver grid.
    pub fn x2_tilde_increment(self: &Arc<Self>) -> LaplaceIncrement2 {
        let lift = self.clone();
        let grid = self.driver.grid().clone();
        let n = self.dims();
        LaplaceIncrement2::from_fn(grid.clone(), self.measure.clone(), Shape::new(n, n), move |s, t, k| {
            lift.x2_tilde(grid.time(s), grid.time(t), k).expect("grid pair")
        })
    }
}
