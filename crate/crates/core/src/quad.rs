//! Adaptive Gauss–Legendre integration used by the oracles and quadrature builders.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

fn rule(n: usize) -> &'static [(f64, f64)] {
    static R10: OnceLock<GaussLegendre> = OnceLock::new();
    static R21: OnceLock<GaussLegendre> = OnceLock::new();
    static R8: OnceLock<GaussLegendre> = OnceLock::new();
    let cell = match n {
        8 => &R8,
        10 => &R10,
        21 => &R21,
        _ => unreachable!("unsupported rule size {n}"),
    };
    cell.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(n).unwrap())).as_node_weight_pairs()
}

/// Nodes and weights of the fixed 8-point rule on `[a, b]`.
pub(crate) fn gl8(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    rule(8).iter().map(move |&(x, w)| (c + h * x, h * w))
}

fn fixed(n: usize, a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    h * rule(n).iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>()
}

/// Integral estimate and the accumulated error estimate.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Recursive bisection comparing 10- and 21-point rules on each panel.
pub(crate) fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Integral {
    if a == b {
        return Integral { value: 0.0, error: 0.0 };
    }
    let coarse = fixed(10, a, b, &mut f);
    let fine = fixed(21, a, b, &mut f);
    let mut out = Integral { value: 0.0, error: 0.0 };
    let scale = fine.abs();
    recurse(&mut f, a, b, coarse, fine, abs_tol, rel_tol, scale, 0, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    coarse: f64,
    fine: f64,
    abs_tol: f64,
    rel_tol: f64,
    scale: f64,
    depth: u32,
    out: &mut Integral,
) {
    let err = (fine - coarse).abs();
    if err <= abs_tol.max(rel_tol * scale) || depth >= 40 {
        out.value += fine;
        out.error += err;
        return;
    }
    let m = 0.5 * (a + b);
    let (lc, lf) = (fixed(10, a, m, f), fixed(21, a, m, f));
    let (rc, rf) = (fixed(10, m, b, f), fixed(21, m, b, f));
    let scale = scale.max((lf + rf).abs());
    recurse(f, a, m, lc, lf, 0.5 * abs_tol, rel_tol, scale, depth + 1, out);
    recurse(f, m, b, rc, rf, 0.5 * abs_tol, rel_tol, scale, depth + 1, out);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_and_peaked_integrands() {
        let i = integrate(f64::exp, 0.0, 1.0, 1e-14, 1e-14);
        assert!((i.value - (1f64.exp() - 1.0)).abs() < 1e-14);
        let i = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 1e-12);
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((i.value - exact).abs() / exact < 1e-10);
    }

    #[test]
    fn gl8_integrates_degree_fifteen() {
        let s: f64 = gl8(0.0, 2.0).map(|(x, w)| w * x.powi(15)).sum();
        assert!((s - 2f64.powi(16) / 16.0).abs() < 1e-9);
    }
}
