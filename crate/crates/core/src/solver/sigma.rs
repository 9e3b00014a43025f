use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Scalar profile `f` applied entrywise in [`SigmaField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Zero,
    Constant,
    Linear,
    Sin,
    Tanh,
}

impl Profile {
    /// `f^{(order)}(v)` for `order <= 3`.
    #[inline]
    fn derivative(self, order: usize, v: f64) -> f64 {
        match (self, order) {
            (Profile::Zero, _) => 0.0,
            (Profile::Constant, 0) => 1.0,
            (Profile::Constant, _) => 0.0,
            (Profile::Linear, 0) => v,
            (Profile::Linear, 1) => 1.0,
            (Profile::Linear, _) => 0.0,
            (Profile::Sin, 0) => v.sin(),
            (Profile::Sin, 1) => v.cos(),
            (Profile::Sin, 2) => -v.sin(),
            (Profile::Sin, _) => -v.cos(),
            (Profile::Tanh, 0) => v.tanh(),
            (Profile::Tanh, 1) => {
                let t = v.tanh();
                1.0 - t * t
            }
            (Profile::Tanh, 2) => {
                let t = v.tanh();
                -2.0 * t * (1.0 - t * t)
            }
            (Profile::Tanh, _) => {
                let t = v.tanh();
                let s = 1.0 - t * t;
                -2.0 * s * (s - 2.0 * t * t)
            }
        }
    }

    /// `sup |f^{(order)}|` over the real line (infinite for unbounded profiles).
    fn sup_bound(self, order: usize) -> f64 {
        match (self, order) {
            (Profile::Zero, _) => 0.0,
            (Profile::Constant, 0) => 1.0,
            (Profile::Constant, _) => 0.0,
            (Profile::Linear, 0) => f64::INFINITY,
            (Profile::Linear, 1) => 1.0,
            (Profile::Linear, _) => 0.0,
            (Profile::Sin, _) => 1.0,
            (Profile::Tanh, 0) | (Profile::Tanh, 1) => 1.0,
            (Profile::Tanh, 2) => 4.0 / (3.0 * 3f64.sqrt()),
            (Profile::Tanh, _) => 2.0,
        }
    }
}

/// `σ: ℝ^{1×d} → ℝ^{n×d}` of the form `σ_{al}(y) = offset_{al} + scale_{al} f(y_l)`.
///
/// Derivatives are stored as `∂_m σ_{al}` at flat index `(a d + l) d + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaField {
    n: usize,
    d: usize,
    profile: Profile,
    scale: Vec<f64>,
    offset: Vec<f64>,
}

impl SigmaField {
    pub fn new(n: usize, d: usize, profile: Profile, scale: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return invalid("σ needs positive dimensions");
        }
        if scale.len() != n * d || offset.len() != n * d {
            return invalid(format!("σ parameters must have {} entries (n = {n}, d = {d})", n * d));
        }
        if scale.iter().chain(&offset).any(|v| !v.is_finite()) {
            return invalid("σ parameters must be finite");
        }
        Ok(Self { n, d, profile, scale, offset })
    }

    pub fn zero(n: usize, d: usize) -> Self {
        Self { n, d, profile: Profile::Zero, scale: vec![0.0; n * d], offset: vec![0.0; n * d] }
    }

    /// `σ ≡ c` with `c` an `n x d` row-major matrix.
    pub fn constant(n: usize, d: usize, c: Vec<f64>) -> Result<Self> {
        Self::new(n, d, Profile::Zero, vec![0.0; n * d], c)
    }

    /// Same profile and scale for every entry, no offset.
    pub fn uniform(n: usize, d: usize, profile: Profile, scale: f64) -> Result<Self> {
        Self::new(n, d, profile, vec![scale; n * d], vec![0.0; n * d])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    /// Writes `σ(y)` (`n x d`) into `out`.
    #[inline]
    pub fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        for a in 0..self.n {
            for l in 0..self.d {
                let p = a * self.d + l;
                out[p] = self.offset[p] + self.scale[p] * self.profile.derivative(0, y[l]);
            }
        }
    }

    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.d];
        self.eval_into(y, &mut out);
        out
    }

    /// Writes the nonzero diagonal `∂_l σ_{al}(y)` (`n x d`) into `out`.
    #[inline]
    pub fn diag_derivative_into(&self, y: &[f64], out: &mut [f64]) {
        for a in 0..self.n {
            for l in 0..self.d {
                let p = a * self.d + l;
                out[p] = self.scale[p] * self.profile.derivative(1, y[l]);
            }
        }
    }

    fn tensor(&self, order: usize, y: &[f64]) -> Vec<f64> {
        let (n, d) = (self.n, self.d);
        let mut out = vec![0.0; n * d * d.pow(order as u32)];
        let stride = d.pow(order as u32);
        for a in 0..n {
            for l in 0..d {
                let p = a * d + l;
                // Only the all-l multi-index is nonzero.
                let mut idx = 0;
                for _ in 0..order {
                    idx = idx * d + l;
                }
                out[p * stride + idx] = self.scale[p] * self.profile.derivative(order, y[l]);
            }
        }
        out
    }

    /// `Dσ(y)`: `∂_m σ_{al}` at `(a d + l) d + m`.
    pub fn jacobian(&self, y: &[f64]) -> Vec<f64> {
        self.tensor(1, y)
    }

    /// `D²σ(y)`: `∂_m ∂_q σ_{al}` at `((a d + l) d + m) d + q`.
    pub fn hessian(&self, y: &[f64]) -> Vec<f64> {
        self.tensor(2, y)
    }

    /// `D³σ(y)`, indexed like [`SigmaField::hessian`] with one more trailing index.
    pub fn third(&self, y: &[f64]) -> Vec<f64> {
        self.tensor(3, y)
    }

    /// Declared `sup ‖D^k σ‖` for `k = 0..=3` (entrywise maximum).
    pub fn sup_bounds(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (k, o) in out.iter_mut().enumerate() {
            let s = self.scale.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let b = if k == 0 { self.offset.iter().fold(0.0f64, |m, v| m.max(v.abs())) } else { 0.0 };
            *o = if s == 0.0 { b } else { b + s * self.profile.sup_bound(k) };
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_central_differences() {
        let h = 1e-5;
        for profile in [Profile::Linear, Profile::Sin, Profile::Tanh, Profile::Constant] {
            let s = SigmaField::new(2, 2, profile, vec![1.0, -0.5, 2.0, 0.3], vec![0.1, 0.0, -1.0, 0.2]).unwrap();
            for y in [[0.3, -1.2], [2.0, 0.7]] {
                let jac = s.jacobian(&y);
                let hes = s.hessian(&y);
                for m in 0..2 {
                    let mut yp = y;
                    let mut ym = y;
                    yp[m] += h;
                    ym[m] -= h;
                    let (fp, fm) = (s.eval(&yp), s.eval(&ym));
                    let (jp, jm) = (s.jacobian(&yp), s.jacobian(&ym));
                    for p in 0..4 {
                        let fd = (fp[p] - fm[p]) / (2.0 * h);
                        assert!((fd - jac[p * 2 + m]).abs() <= 1e-6 * (1.0 + fd.abs()), "{profile:?}");
                        for q in 0..2 {
                            let fd2 = (jp[p * 2 + q] - jm[p * 2 + q]) / (2.0 * h);
                            assert!((fd2 - hes[(p * 2 + q) * 2 + m]).abs() <= 1e-6 * (1.0 + fd2.abs()));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn catalog_shapes() {
        assert_eq!(SigmaField::zero(2, 3).eval(&[1.0, 2.0, 3.0]), vec![0.0; 6]);
        let c = SigmaField::constant(1, 2, vec![4.0, -1.0]).unwrap();
        assert_eq!(c.eval(&[9.0, 9.0]), vec![4.0, -1.0]);
        assert_eq!(c.jacobian(&[9.0, 9.0]), vec![0.0; 4]);
        assert!(SigmaField::constant(1, 2, vec![1.0]).is_err());
        let t = SigmaField::uniform(1, 1, Profile::Tanh, 1.0).unwrap();
        assert_eq!(t.sup_bounds()[1], 1.0);
    }
}
