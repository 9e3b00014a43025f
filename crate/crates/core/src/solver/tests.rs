use std::sync::Arc;

use super::*;
use crate::algebra::{Shape, TimeGrid};
use crate::laplace::KernelMeasure;
use crate::lift::{sample_fbm, DriverPath, RoughLift};
use crate::sewing::SewingConfig;

fn smooth_driver(cells: usize, dims: usize, f: impl Fn(f64) -> Vec<f64>) -> Arc<DriverPath> {
    let g = Arc::new(TimeGrid::uniform(1.0, cells).unwrap());
    Arc::new(DriverPath::from_fn(g, dims, f).unwrap())
}

fn lift_of(driver: Arc<DriverPath>, atoms: Vec<(f64, f64)>, gamma: f64) -> RoughLift {
    RoughLift::new(driver, Arc::new(KernelMeasure::from_atoms(atoms).unwrap()), gamma).unwrap()
}

/// RK4 on `ỹ_k' = -ξ_k ỹ_k + x'(t) σ(a + Σ w ỹ)` along a piecewise-linear
/// scalar-output driver, `steps` per cell; returns `y` at the grid points.
fn rk4_oracle(driver: &DriverPath, atoms: &[(f64, f64)], sigma: &dyn Fn(&[f64]) -> Vec<f64>, a: &[f64], steps: usize) -> Vec<Vec<f64>> {
    let (n, d, na) = (driver.dims(), a.len(), atoms.len());
    let project = |s: &[f64]| -> Vec<f64> {
        (0..d).map(|l| a[l] + (0..na).map(|k| atoms[k].1 * s[k * d + l]).sum::<f64>()).collect()
    };
    let rhs = |s: &[f64], m: &[f64]| -> Vec<f64> {
        let sg = sigma(&project(s));
        let mut out = vec![0.0; na * d];
        for k in 0..na {
            for l in 0..d {
                let drive: f64 = (0..n).map(|i| m[i] * sg[i * d + l]).sum();
                out[k * d + l] = -atoms[k].0 * s[k * d + l] + drive;
            }
        }
        out
    };
    let mut state = vec![0.0; na * d];
    let g = driver.grid();
    let mut ys = vec![project(&state)];
    for c in 0..g.cells() {
        let m = driver.slope(c);
        let h = (g.time(c + 1) - g.time(c)) / steps as f64;
        for _ in 0..steps {
            let axpy = |x: &[f64], k: &[f64], f: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + f * b).collect() };
            let k1 = rhs(&state, m);
            let k2 = rhs(&axpy(&state, &k1, h / 2.0), m);
            let k3 = rhs(&axpy(&state, &k2, h / 2.0), m);
            let k4 = rhs(&axpy(&state, &k3, h), m);
            for i in 0..state.len() {
                state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        ys.push(project(&state));
    }
    ys
}

fn sup_error(sol: &Solution, oracle: &[Vec<f64>]) -> f64 {
    oracle
        .iter()
        .enumerate()
        .flat_map(|(i, o)| sol.y(i).iter().zip(o).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

fn rough_config() -> SolverConfig {
    SolverConfig::new(0.45, 0.4, 1e-12)
}

fn young_config() -> SolverConfig {
    SolverConfig { young: true, ..SolverConfig::new(0.9, 0.8, 1e-12) }
}

#[test]
fn zero_field_keeps_initial_value() {
    let lift = lift_of(smooth_driver(32, 2, |t| vec![t.sin(), t * t]), vec![(1.0, 1.0), (4.0, 0.5)], 1.0);
    let sigma = SigmaField::zero(2, 3);
    let a = [1.0, -2.0, 0.5];
    for sol in [solve_young(&lift, &sigma, &a, &young_config()).unwrap(), solve_rough(&lift, &sigma, &a, &rough_config()).unwrap()] {
        for i in 0..sol.grid().len() {
            assert_eq!(sol.y(i), &a);
            for k in 0..2 {
                assert!(sol.ytilde(i, k).iter().all(|v| *v == 0.0));
            }
        }
    }
}

#[test]
fn constant_field_reproduces_x1_tilde() {
    let lift = lift_of(smooth_driver(64, 2, |t| vec![(3.0 * t).sin(), t * t - t]), vec![(0.5, 1.0), (3.0, -0.4)], 1.0);
    let c = vec![1.0, -0.5, 2.0, 0.25];
    let sigma = SigmaField::constant(2, 2, c.clone()).unwrap();
    let a = [0.3, 0.1];
    for sol in [solve_young(&lift, &sigma, &a, &young_config()).unwrap(), solve_rough(&lift, &sigma, &a, &rough_config()).unwrap()] {
        for i in [0, 7, 40, 64] {
            let t = sol.grid().time(i);
            for k in 0..2 {
                let x1 = lift.x1_tilde(0.0, t, k).unwrap();
                let expected = crate::algebra::matmul(&x1, Shape::new(1, 2), &c, Shape::new(2, 2));
                for (v, e) in sol.ytilde(i, k).iter().zip(&expected) {
                    assert!((v - e).abs() < 1e-10, "{:?} t = {t}: {v} vs {e}", sol.mode());
                }
            }
        }
    }
}

#[test]
fn young_linear_matches_rk4() {
    let driver = smooth_driver(256, 1, |t| vec![t]);
    let atoms = vec![(1.0, 1.0)];
    let lift = lift_of(driver.clone(), atoms.clone(), 1.0);
    let sigma = SigmaField::uniform(1, 1, Profile::Linear, 1.0).unwrap();
    let sol = solve_young(&lift, &sigma, &[1.0], &young_config()).unwrap();
    let oracle = rk4_oracle(&driver, &atoms, &|y| vec![y[0]], &[1.0], 40);
    assert!(sup_error(&sol, &oracle) < 1e-5, "{}", sup_error(&sol, &oracle));
}

#[test]
fn rough_sine_matches_rk4() {
    let driver = smooth_driver(256, 1, |t| vec![(4.0 * t).sin() + t]);
    let atoms = vec![(1.0, 1.0)];
    let lift = lift_of(driver.clone(), atoms.clone(), 1.0);
    let sigma = SigmaField::uniform(1, 1, Profile::Sin, 1.0).unwrap();
    let sol = solve_rough(&lift, &sigma, &[0.5], &rough_config()).unwrap();
    let oracle = rk4_oracle(&driver, &atoms, &|y| vec![y[0].sin()], &[0.5], 4);
    assert!(sup_error(&sol, &oracle) < 1e-4, "{}", sup_error(&sol, &oracle));
    assert!(sol.picard_residual() <= 2.0 * rough_config().tolerance, "{}", sol.picard_residual());
}

#[test]
fn multidimensional_rough_matches_rk4() {
    let driver = smooth_driver(128, 2, |t| vec![(3.0 * t).sin(), (2.0 * t).cos() * t]);
    let atoms = vec![(0.5, 0.7), (2.0, 0.6)];
    let lift = lift_of(driver.clone(), atoms.clone(), 1.0);
    let sigma = SigmaField::new(2, 2, Profile::Tanh, vec![1.0, 0.5, -0.7, 1.2], vec![0.1, 0.0, 0.0, -0.2]).unwrap();
    let a = [0.2, -0.4];
    let sol = solve_rough(&lift, &sigma, &a, &rough_config()).unwrap();
    let s2 = sigma.clone();
    let oracle = rk4_oracle(&driver, &atoms, &move |y| s2.eval(y), &a, 4);
    assert!(sup_error(&sol, &oracle) < 1e-4, "{}", sup_error(&sol, &oracle));
}

#[test]
fn point_mass_at_zero_is_the_diffusion_solve() {
    let grid = Arc::new(TimeGrid::dyadic(1.0, 7).unwrap());
    let driver = Arc::new(sample_fbm(0.4, grid, 1, 3).unwrap());
    let lift = lift_of(driver.clone(), vec![(0.0, 1.0)], 0.38);
    let sigma = SigmaField::uniform(1, 1, Profile::Tanh, 1.0).unwrap();
    let cfg = SolverConfig { sewing_level: 4, ..SolverConfig::new(0.38, 0.35, 1e-12) };
    let a = sol_a();
    let one = solve_rough(&lift, &sigma, &a, &cfg).unwrap();
    let two = solve_rough_diffusion(&driver, &sigma, &a, &cfg).unwrap();
    assert_eq!(one.y_values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(), two.y_values().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert_eq!(one.intervals().len(), two.intervals().len());
}

fn sol_a() -> [f64; 1] {
    [0.25]
}

#[test]
fn two_pass_solve_matches_one_pass() {
    let grid = Arc::new(TimeGrid::dyadic(1.0, 7).unwrap());
    let driver = Arc::new(sample_fbm(0.4, grid, 2, 11).unwrap());
    let lift = lift_of(driver, vec![(0.5, 0.6), (3.0, 0.4)], 0.38);
    let sigma = SigmaField::uniform(2, 1, Profile::Sin, 0.8).unwrap();
    let cfg = SolverConfig { sewing_level: 4, ..SolverConfig::new(0.38, 0.35, 1e-12) };
    let a = [0.1];
    let whole = solve_rough(&lift, &sigma, &a, &cfg).unwrap();
    let first = solve_rough_window(&lift, &sigma, &a, &cfg, &SolveWindow { start: 0.0, end: 0.5, initial: None }).unwrap();
    let mid = first.grid().len() - 1;
    let state = first.path().values_at(mid).to_vec();
    let second = solve_rough_window(&lift, &sigma, &a, &cfg, &SolveWindow { start: 0.5, end: 1.0, initial: Some(state) }).unwrap();
    let end = whole.grid().len() - 1;
    let last = second.grid().len() - 1;
    assert!((whole.y(end)[0] - second.y(last)[0]).abs() <= 10.0 * cfg.tolerance, "{} vs {}", whole.y(end)[0], second.y(last)[0]);
    assert!((whole.y(64)[0] - first.y(mid)[0]).abs() <= 10.0 * cfg.tolerance);
}

#[test]
fn diagnostics_are_reported_per_interval() {
    let grid = Arc::new(TimeGrid::dyadic(1.0, 6).unwrap());
    let driver = Arc::new(sample_fbm(0.4, grid, 1, 5).unwrap());
    let lift = lift_of(driver, vec![(1.0, 1.0)], 0.38);
    let sigma = SigmaField::uniform(1, 1, Profile::Tanh, 1.0).unwrap();
    let cfg = SolverConfig { sewing_level: 3, ..SolverConfig::new(0.38, 0.35, 1e-12) };
    let sol = solve_rough(&lift, &sigma, &[0.0], &cfg).unwrap();
    assert!(!sol.intervals().is_empty());
    assert_eq!(sol.intervals()[0].start, 0.0);
    assert_eq!(sol.intervals().last().unwrap().end, 1.0);
    for w in sol.intervals().windows(2) {
        assert_eq!(w[0].end, w[1].start);
    }
    assert!(sol.intervals().iter().all(|r| r.contraction < 1.0 && r.q_norm.is_finite()));
    assert_eq!(sol.diagnostics_table().rows.len(), sol.intervals().len());
    let (a1, a2) = sol.alphas();
    assert!(0.0 < a2 && a2 < (0.38 - 0.35) / 2.0);
    assert!(a2 - 0.38 < a1 - 1.0 && a1 - 1.0 < a2 - 0.35);
    assert!(sol.window_respected().is_some());
}

#[test]
fn config_validation() {
    assert!(SolverConfig::new(0.45, 0.4, 1e-10).validate().is_ok());
    assert!(SolverConfig::new(0.45, 0.3, 1e-10).validate().is_err());
    assert!(SolverConfig::new(0.4, 0.45, 1e-10).validate().is_err());
    assert!(SolverConfig::new(0.45, 0.4, 0.0).validate().is_err());
    let lift = lift_of(smooth_driver(8, 1, |t| vec![t]), vec![(1.0, 1.0)], 0.45);
    let sigma = SigmaField::uniform(1, 1, Profile::Sin, 1.0).unwrap();
    assert!(solve_young(&lift, &sigma, &[0.0], &young_config()).is_err());
    assert!(solve_rough(&lift, &sigma, &[0.0, 1.0], &rough_config()).is_err());
}

#[test]
fn young_integral_examples() {
    let lift = lift_of(smooth_driver(64, 1, |t| vec![t]), vec![(0.0, 1.0), (1.0, 1.0)], 1.0);
    let cfg = SewingConfig { max_level: 12, ..SewingConfig::default() };
    let c = young_integral(&lift, |_| vec![2.5], 1, 0.1, 0.8, 1, &cfg).unwrap();
    let x1 = lift.x1_tilde(0.1, 0.8, 1).unwrap()[0];
    assert!(c.diagnostics.partial_sums.iter().all(|s| (s[0] - 2.5 * x1).abs() < 1e-14));
    let r = young_integral(&lift, |v| vec![v], 1, 0.0, 1.0, 1, &cfg).unwrap();
    let oracle = (-1f64).exp();
    assert!((r.diagnostics.extrapolated[0] - oracle).abs() < 1e-7, "{}", r.diagnostics.extrapolated[0]);
    assert!((r.value[0] - oracle).abs() < 1e-4);
    let scaled = lift_of(Arc::new(lift.driver().scaled(3.0).unwrap()), vec![(0.0, 1.0), (1.0, 1.0)], 1.0);
    let rs = young_integral(&scaled, |v| vec![v], 1, 0.0, 1.0, 1, &cfg).unwrap();
    assert!((rs.value[0] - 3.0 * r.value[0]).abs() < 1e-13);
    let rough = lift_of(smooth_driver(8, 1, |t| vec![t]), vec![(1.0, 1.0)], 0.45);
    assert!(young_integral(&rough, |v| vec![v], 1, 0.0, 1.0, 0, &cfg).is_err());
}

#[test]
fn rough_integral_examples() {
    // φ ≡ 1 so that x¹ = x; the zero-weight atom only exposes the frequency ξ = 1.
    let lift = lift_of(smooth_driver(16, 1, |t| vec![t]), vec![(0.0, 1.0), (1.0, 0.0)], 1.0);
    let grid = Arc::new(TimeGrid::dyadic(1.0, 10).unwrap());
    let z = ControlledPath::from_fn(grid.clone(), Shape::scalar(), 1, 0.9, |t| (vec![t], vec![1.0])).unwrap();
    let cfg = SewingConfig { max_level: 10, ..SewingConfig::default() };
    let r = rough_integral(&lift, &z, 0.0, 1.0, 1, &cfg).unwrap();
    assert!((r.value[0] - (-1f64).exp()).abs() < 1e-12, "{}", r.value[0]);
    let zero = ControlledPath::from_fn(grid.clone(), Shape::scalar(), 1, 0.9, |_| (vec![0.0], vec![0.0])).unwrap();
    assert_eq!(rough_integral(&lift, &zero, 0.0, 1.0, 1, &cfg).unwrap().value, vec![0.0]);
    let flat = ControlledPath::from_fn(grid, Shape::scalar(), 1, 0.9, |t| (vec![t], vec![0.0])).unwrap();
    let a = rough_integral(&lift, &flat, 0.0, 1.0, 1, &cfg).unwrap();
    let b = young_integral(&lift, |v| vec![v], 1, 0.0, 1.0, 1, &cfg).unwrap();
    assert!((a.value[0] - b.value[0]).abs() < 1e-12);
}

#[test]
fn compose_sigma_examples() {
    let lift = lift_of(smooth_driver(16, 1, |t| vec![(2.0 * t).sin()]), vec![(0.0, 1.0)], 1.0);
    let grid = Arc::new(TimeGrid::dyadic(1.0, 4).unwrap());
    let y = |t: f64| (2.0 * t).sin() + 0.3 * t * t;
    let z = ControlledPath::from_fn(grid, Shape::scalar(), 1, 0.9, |t| (vec![y(t)], vec![1.0])).unwrap();
    let id = compose_sigma(&z, &SigmaField::uniform(1, 1, Profile::Linear, 1.0).unwrap()).unwrap();
    assert_eq!(id.zeta(3), z.zeta(3));
    assert_eq!(id.remainder(&lift, 2, 9).unwrap(), z.remainder(&lift, 2, 9).unwrap());
    let c = compose_sigma(&z, &SigmaField::constant(1, 1, vec![2.0]).unwrap()).unwrap();
    assert_eq!(c.zeta(5), &[0.0]);
    assert!(c.remainder(&lift, 1, 12).unwrap()[0].abs() < 1e-15);
    // σ(y) = y² built from the offset-free quadratic identity 2 y_s r + (δy)².
    let zz = ControlledPath::new(
        z.grid().clone(),
        Shape::scalar(),
        1,
        (0..17).map(|i| y(i as f64 / 16.0).powi(2)).collect(),
        (0..17).map(|i| 2.0 * y(i as f64 / 16.0)).collect(),
        0.9,
    )
    .unwrap();
    for (s, t) in [(0, 5), (3, 16), (7, 8)] {
        let r = z.remainder(&lift, s, t).unwrap()[0];
        let dy = z.value(t)[0] - z.value(s)[0];
        let lhs = zz.remainder(&lift, s, t).unwrap()[0];
        assert!((lhs - (2.0 * z.value(s)[0] * r + dy * dy)).abs() < 1e-12);
    }
}

#[test]
fn project_y_examples() {
    let grid = Arc::new(TimeGrid::uniform(1.0, 4).unwrap());
    let two = Arc::new(KernelMeasure::from_atoms(vec![(1.0, 0.5), (2.0, -0.5)]).unwrap());
    let same: Vec<f64> = (0..5).flat_map(|i| [i as f64, i as f64]).collect();
    let path = LaplaceControlledPath::new(grid.clone(), two.clone(), 1, 1, same, vec![0.0; 5]).unwrap();
    let p = project_y(&path, &two, &[3.0]).unwrap();
    assert!(p.values.iter().all(|v| *v == 3.0));
    let zero = LaplaceControlledPath::new(grid.clone(), two.clone(), 1, 1, vec![0.0; 10], vec![0.0; 5]).unwrap();
    assert_eq!(project_y(&zero, &two, &[1.5]).unwrap().values, vec![1.5; 5]);
    let other = KernelMeasure::from_atoms(vec![(1.0, 0.5)]).unwrap();
    assert!(project_y(&zero, &other, &[1.5]).is_err());
    // Drift plus twisted increments rebuild δy.
    let vals: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin()).collect();
    let path = LaplaceControlledPath::new(grid.clone(), two.clone(), 1, 1, vals, vec![0.0; 5]).unwrap();
    let p = project_y(&path, &two, &[0.0]).unwrap();
    for i in 0..4 {
        let dt = grid.time(i + 1) - grid.time(i);
        let twisted: f64 = two
            .atoms()
            .iter()
            .enumerate()
            .map(|(k, &(xi, w))| w * (path.value(i + 1, k)[0] - (-xi * dt).exp() * path.value(i, k)[0]))
            .sum();
        assert!((p.values[i + 1] - p.values[i] - twisted - p.drift[i]).abs() < 1e-14);
    }
}
