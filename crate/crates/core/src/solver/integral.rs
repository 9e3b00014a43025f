use super::controlled::ControlledPath;
use crate::algebra::Shape;
use crate::error::{invalid, shape, Result};
use crate::lift::RoughLift;
use crate::sewing::{compensated_sum_tilde, vector_germ, SewingConfig, SewingResult};

fn check_interval(lift: &RoughLift, s: f64, t: f64, k: usize) -> Result<()> {
    if k >= lift.measure().len() {
        return invalid(format!("atom {k} out of range ({} atoms)", lift.measure().len()));
    }
    let horizon = lift.driver().grid().horizon();
    if !(0.0 <= s && s <= t && t <= horizon) {
        return invalid(format!("need 0 <= s <= t <= {horizon}, got [{s}, {t}]"));
    }
    Ok(())
}

/// `J_{ts}(d̃x z)(ξ_k)` as the compensated sum of the germ `x̃¹_{ts}(ξ_k) z_s`.
///
/// `z` maps a time to an `n x d` matrix; the result is a `1 x d` row.
/// Requires a first-order lift with `γ > 1/2`.
pub fn young_integral(
    lift: &RoughLift,
    z: impl Fn(f64) -> Vec<f64> + Sync,
    d: usize,
    s: f64,
    t: f64,
    k: usize,
    config: &SewingConfig,
) -> Result<SewingResult> {
    check_interval(lift, s, t, k)?;
    if !lift.hypotheses().first_order || lift.gamma() <= 0.5 {
        return invalid(format!(
            "Young integration needs a first-order lift with γ > 1/2 (γ = {})",
            lift.gamma()
        ));
    }
    let n = lift.dims();
    let probe = z(s);
    if probe.len() != n * d {
        return shape(format!("integrand must be {n}x{d}, got {} entries", probe.len()));
    }
    let xi = lift.measure().atoms()[k].0;
    let germ = vector_germ(d, |a, b, out: &mut [f64]| {
        let x1 = lift.x1_tilde(a, b, k).expect("partition inside the horizon");
        let za = z(a);
        for (l, o) in out.iter_mut().enumerate() {
            *o = (0..n).map(|i| x1[i] * za[i * d + l]).sum();
        }
    });
    compensated_sum_tilde(&germ, xi, s, t, config)
}

/// `J_{ts}(d̃x z)(ξ_k)` for a controlled integrand, from the germ
/// `x̃¹_{ts} z_s + x̃²_{ts}·ζ*_s`.
///
/// `z` has shape `n x d` with derivative `ζ` of shape `n x (n d)`; every
/// dyadic point of `[s, t]` up to `config.max_level` must lie on its grid.
pub fn rough_integral(
    lift: &RoughLift,
    z: &ControlledPath,
    s: f64,
    t: f64,
    k: usize,
    config: &SewingConfig,
) -> Result<SewingResult> {
    check_interval(lift, s, t, k)?;
    if !lift.hypotheses().second_order {
        return invalid("rough integration needs a lift satisfying the second-order hypothesis");
    }
    let n = lift.dims();
    if z.n() != n || z.shape().rows != n {
        return shape(format!("integrand must have {n} rows and be controlled by an {n}-dimensional driver"));
    }
    let d = z.shape().cols;
    let len = Shape::new(n, d).len();
    let nn = n * n;
    let xi = lift.measure().atoms()[k].0;
    let germ = OnGrid {
        path: z,
        inner: vector_germ(d, move |a, b, out: &mut [f64]| {
            let i = z.index_of(a).expect("checked by supports");
            let x1 = lift.x1_tilde(a, b, k).expect("partition inside the horizon");
            let x2 = lift.x2_tilde_all(a, b).expect("partition inside the horizon");
            let x2 = &x2[k * nn..(k + 1) * nn];
            let (za, zeta) = (z.value(i), z.zeta(i));
            for (l, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for p in 0..n {
                    acc += x1[p] * za[p * d + l];
                    // (x̃²·ζ*)_l = Σ_{p,q} x̃²_{pq} ζ_{q,(p,l)}
                    for q in 0..n {
                        acc += x2[p * n + q] * zeta[q * len + p * d + l];
                    }
                }
                *o = acc;
            }
        }),
    };
    compensated_sum_tilde(&germ, xi, s, t, config)
}

/// Restricts a germ to the grid of a controlled path.
struct OnGrid<'a, G> {
    path: &'a ControlledPath,
    inner: G,
}

impl<G: crate::sewing::Germ> crate::sewing::Germ for OnGrid<'_, G> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, s: f64, t: f64, out: &mut [f64]) {
        self.inner.eval(s, t, out)
    }

    fn supports(&self, t: f64) -> bool {
        self.path.grid().locate(t).is_some()
    }
}
