//! Closed forms for integrals of products of decaying exponentials.
//!
//! Everything reduces to divided differences of `exp`:
//!
//! ```text
//! ∫_0^Δ e^{-λ(Δ-r)} e^{-μr} dr                      = Δ  · [ -λΔ, -μΔ ] exp
//! ∫_{0<q<r<Δ} e^{-λ(Δ-r)} e^{-μ(r-q)} dq dr        = Δ² · [ -λΔ, -μΔ, 0 ] exp
//! ```

/// Below this spread `expm1(x)/x` is replaced by its Taylor polynomial.
pub const SWITCH_THRESHOLD: f64 = 1e-6;

/// `expm1(x) / x`, continuous through `x = 0`.
#[inline]
fn expm1_ratio(x: f64) -> f64 {
    if x.abs() < SWITCH_THRESHOLD {
        1.0 + x * (0.5 + x * (1.0 / 6.0 + x / 24.0))
    } else {
        x.exp_m1() / x
    }
}

/// First divided difference `(e^a - e^b) / (a - b)`, with the limit `e^a` on the diagonal.
#[inline]
pub fn dd2(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi.exp() * expm1_ratio(lo - hi)
}

/// Second divided difference `[z1, z2, z3] exp`, symmetric in its arguments.
pub fn dd3(z1: f64, z2: f64, z3: f64) -> f64 {
    let mut z = [z1, z2, z3];
    z.sort_by(|a, b| b.total_cmp(a));
    let spread = z[0] - z[2];
    if spread <= 1.0 {
        // e^m Σ_k h_k(z - m) / (k + 2)!, h_k the complete homogeneous polynomials.
        let m = (z[0] + z[1] + z[2]) / 3.0;
        let d = [z[0] - m, z[1] - m, z[2] - m];
        const K: usize = 24;
        let mut h = [0.0f64; K];
        h[0] = 1.0;
        for &x in &d {
            for k in 1..K {
                h[k] += x * h[k - 1];
            }
        }
        let mut fact = 2.0;
        let mut sum = 0.0;
        for (k, hk) in h.iter().enumerate() {
            sum += hk / fact;
            fact *= (k + 3) as f64;
        }
        m.exp() * sum
    } else {
        (dd2(z[0], z[1]) - dd2(z[1], z[2])) / spread
    }
}

/// `g_ξ(h) = ∫_0^h e^{-ξ(h-r)} dr = (1 - e^{-ξh}) / ξ`, exactly `h` at `ξ = 0`.
#[inline]
pub fn decay_integral(xi: f64, h: f64) -> f64 {
    if xi == 0.0 {
        h
    } else {
        h * expm1_ratio(-xi * h)
    }
}

/// `∫_0^Δ e^{-λ(Δ-r)} e^{-μr} dr`.
#[inline]
pub fn exp_int(lambda: f64, mu: f64, delta: f64) -> f64 {
    if lambda == 0.0 && mu == 0.0 {
        delta
    } else {
        delta * dd2(-lambda * delta, -mu * delta)
    }
}

/// `∫_{0<q<r<Δ} e^{-λ(Δ-r)} e^{-μ(r-q)} dq dr`, exactly `Δ²/2` when both rates vanish.
#[inline]
pub fn exp_int2(lambda: f64, mu: f64, delta: f64) -> f64 {
    (delta * delta) * dd3(-lambda * delta, -mu * delta, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    #[test]
    fn exp_int_examples() {
        assert_eq!(exp_int(0.0, 0.0, 1.0), 1.0);
        let v = exp_int(1.0, 2.0, 1.0);
        let oracle = integrate(|r| (-(1.0 - r)).exp() * (-2.0 * r).exp(), 0.0, 1.0, 1e-15, 1e-15).value;
        assert!((v - oracle).abs() < 1e-14);
        assert!((v - 0.232544157934830).abs() < 1e-12);
        let near = exp_int(1.0, 1.0 + 1e-9, 1.0);
        assert!((near - (-1f64).exp()).abs() / (-1f64).exp() < 1e-8);
        assert_eq!(exp_int(3.0, 3.0, 0.5), 0.5 * (-1.5f64).exp());
    }

    #[test]
    fn continuous_across_switch() {
        for &a in &[-3.0, -0.2, 0.0, 1.5] {
            let below = dd2(a, a - SWITCH_THRESHOLD * (1.0 - 1e-9));
            let above = dd2(a, a - SWITCH_THRESHOLD * (1.0 + 1e-9));
            assert!((below - above).abs() / above < 1e-10, "a = {a}");
        }
    }

    #[test]
    fn dd3_matches_double_integral() {
        for &(l, m, d) in &[(0.0, 0.0, 1.0), (1.0, 2.0, 1.0), (5.0, 0.3, 2.0), (40.0, 41.0, 1.0), (1e-3, 0.0, 0.7)] {
            let oracle = integrate(
                |r| (-l * (d - r)).exp() * integrate(|q| (-m * (r - q)).exp(), 0.0, r, 1e-16, 1e-15).value,
                0.0,
                d,
                1e-16,
                1e-14,
            )
            .value;
            let v = exp_int2(l, m, d);
            assert!((v - oracle).abs() <= 1e-12 * oracle.abs().max(1e-300), "{l} {m} {d}: {v} vs {oracle}");
        }
        assert_eq!(exp_int2(0.0, 0.0, 0.3), (0.3 * 0.3) * 0.5);
    }

    #[test]
    fn dd3_branches_agree_at_unit_spread() {
        let a = dd3(0.0, -0.5, -1.0);
        let b = (dd2(0.0, -0.5) - dd2(-0.5, -1.0)) / 1.0;
        assert!((a - b).abs() < 1e-14);
        let c = dd3(0.0, -0.5, -1.0 - 1e-12);
        assert!((a - c).abs() < 1e-11);
    }
}
