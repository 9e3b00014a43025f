use crate::error::{invalid, Error, Result};
use crate::quad::integrate;

use super::expint::decay_integral;

/// `c_H ∬_{[s,t]×[u,v]} e^{-ξ(t-a)} e^{-η(v-b)} |a-b|^{2H-2} da db`, the
/// covariance of `x̃¹_{ts}(ξ)` and `x̃¹_{vu}(η)` for fBm with `H > 1/2`.
///
/// The inner integral over `a` at fixed lag `c = b - a` is explicit, which
/// leaves a one-dimensional integral in `c` with kinks at `u - s`, `v - t`
/// and the integrable singularity at `c = 0`. Segments touching the origin
/// are mapped by `c = L w^{1/(2H-1)}`, which removes the singularity.
pub fn wiener_cov_x1(hurst: f64, xi: f64, eta: f64, (s, t): (f64, f64), (u, v): (f64, f64)) -> Result<f64> {
    if !(hurst > 0.5 && hurst < 1.0) {
        return invalid(format!("the Wiener-integral covariance needs 1/2 < H < 1, got {hurst}"));
    }
    if !(xi >= 0.0 && eta >= 0.0) {
        return invalid("Laplace frequencies must be >= 0");
    }
    if !(0.0 <= s && s <= t && 0.0 <= u && u <= v) {
        return invalid(format!("intervals must be ordered and nonnegative, got ({s},{t}) and ({u},{v})"));
    }
    if s == t || u == v {
        return Ok(0.0);
    }
    let lambda = xi + eta;
    let kernel = |c: f64| -> f64 {
        let lo = s.max(u - c);
        let hi = t.min(v - c);
        if hi <= lo {
            return 0.0;
        }
        (-xi * (t - hi) - eta * (v - c - hi)).exp() * decay_integral(lambda, hi - lo)
    };
    let two = 2.0 * hurst - 2.0;
    let p = 1.0 / (2.0 * hurst - 1.0);
    let (cmin, cmax) = (u - t, v - s);
    let mut cuts = vec![cmin, cmax];
    for c in [0.0, u - s, v - t] {
        if c > cmin && c < cmax {
            cuts.push(c);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (abs_tol, rel_tol) = (1e-15, 1e-12);
    let mut total = 0.0;
    let mut error = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let r = if a == 0.0 || b == 0.0 {
            let (len, sign) = if a == 0.0 { (b, 1.0) } else { (-a, -1.0) };
            let scale = len.powf(2.0 * hurst - 1.0) * p;
            integrate(|w| scale * kernel(sign * len * w.powf(p)), 0.0, 1.0, abs_tol, rel_tol)
        } else {
            integrate(|c| c.abs().powf(two) * kernel(c), a, b, abs_tol, rel_tol)
        };
        total += r.value;
        error += r.error;
    }
    let c_h = hurst * (2.0 * hurst - 1.0);
    if !(error <= 1e-9 * total.abs().max(1e-12)) {
        return Err(Error::Quadrature { achieved: error, tolerance: 1e-9 * total.abs() });
    }
    Ok(c_h * total)
}
