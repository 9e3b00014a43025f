use std::sync::Arc;

use proptest::prelude::*;
use rough_volterra::algebra::{estimate_holder_exponent, LaplaceIncrement1, Shape, TimeGrid};
use rough_volterra::harness::Table;
use rough_volterra::laplace::KernelMeasure;
use rough_volterra::lift::{sample_brownian, DriverKind, DriverPath, RoughLift};
use rough_volterra::solver::{solve_rough, solve_young, Profile, SigmaField, SolverConfig};

fn grid_from(mut steps: Vec<f64>) -> Arc<TimeGrid> {
    let mut t = 0.0;
    let mut pts = vec![0.0];
    for s in steps.drain(..) {
        t += s;
        pts.push(t);
    }
    Arc::new(TimeGrid::new(pts).unwrap())
}

fn smooth_lift(cells: usize, atoms: Vec<(f64, f64)>) -> RoughLift {
    let g = Arc::new(TimeGrid::uniform(1.0, cells).unwrap());
    let d = Arc::new(DriverPath::from_fn(g, 1, |t| vec![(3.0 * t).sin() + 0.5 * t]).unwrap());
    RoughLift::new(d, Arc::new(KernelMeasure::from_atoms(atoms).unwrap()), 1.0).unwrap()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn twisted_coboundary_squares_to_zero(
        steps in prop::collection::vec(0.01f64..0.3, 4..9),
        xis in prop::collection::vec(0.0f64..20.0, 1..4),
        seed in any::<u64>(),
    ) {
        let grid = grid_from(steps);
        let mut atoms: Vec<(f64, f64)> = xis.iter().enumerate().map(|(k, &x)| (x + k as f64 * 1e-3, 1.0)).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        atoms.dedup_by(|a, b| a.0 == b.0);
        let measure = Arc::new(KernelMeasure::from_atoms(atoms).unwrap());
        let n = grid.len();
        let na = measure.len();
        let mut state = seed;
        let values: Vec<f64> = (0..n * na)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        let g = LaplaceIncrement1::new(grid, measure, Shape::scalar(), values).unwrap();
        let dd = g.delta_tilde().delta_tilde();
        for s in 0..n {
            for u in s..n {
                for t in u..n {
                    for k in 0..na {
                        prop_assert!(dd.value(s, u, t, k)[0].abs() <= 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn twisted_chasles_for_random_paths(
        increments in prop::collection::vec(-1.0f64..1.0, 8..20),
        xi in 0.0f64..30.0,
        cut in 0.05f64..0.95,
    ) {
        let cells = increments.len();
        let grid = Arc::new(TimeGrid::uniform(1.0, cells).unwrap());
        let mut level = 0.0;
        let mut values = vec![0.0];
        for d in &increments {
            level += d;
            values.push(level);
        }
        let driver = Arc::new(DriverPath::new(grid, 1, values, DriverKind::Deterministic, None).unwrap());
        let lift = RoughLift::new(driver, Arc::new(KernelMeasure::point_mass(xi, 1.0).unwrap()), 1.0).unwrap();
        let whole = lift.x1_tilde(0.0, 1.0, 0).unwrap()[0];
        let right = lift.x1_tilde(cut, 1.0, 0).unwrap()[0];
        let left = lift.x1_tilde(0.0, cut, 0).unwrap()[0];
        let joined = right + (-xi * (1.0 - cut)).exp() * left;
        prop_assert!((whole - joined).abs() <= 1e-13 * (1.0 + whole.abs()));
    }

    #[test]
    fn solution_is_lipschitz_in_the_initial_value(a in -1.0f64..1.0, h in 1e-6f64..1e-2) {
        let lift = smooth_lift(32, vec![(1.0, 1.0), (5.0, 0.5)]);
        let sigma = SigmaField::uniform(1, 1, Profile::Sin, 1.0).unwrap();
        let config = SolverConfig { young: true, sewing_level: 3, ..SolverConfig::new(1.0, 0.9, 1e-13) };
        let y0 = solve_young(&lift, &sigma, &[a], &config).unwrap();
        let y1 = solve_young(&lift, &sigma, &[a + h], &config).unwrap();
        // |σ'| <= 1 and the kernel mass is 1.5 along a driver of variation < 4.
        let bound = (1.5f64 * 4.0).exp();
        prop_assert!(sup_diff(y0.y_values(), y1.y_values()) <= bound * h);
    }
}

/// On a smooth driver both solvers approximate the same solution. The rough
/// germ leaves the twist drift `a_us(ξ) ỹ_s` in the remainder, so the gap
/// closes at first order in the sub-cell width.
#[test]
fn young_and_rough_solves_agree_on_smooth_drivers() {
    let lift = smooth_lift(64, vec![(0.5, 1.0), (3.0, 0.5)]);
    for profile in [Profile::Linear, Profile::Sin, Profile::Tanh] {
        let sigma = SigmaField::uniform(1, 1, profile, 0.8).unwrap();
        let gap = |level: u32| {
            let young = solve_young(
                &lift,
                &sigma,
                &[0.3],
                &SolverConfig { young: true, sewing_level: level, ..SolverConfig::new(1.0, 0.9, 1e-13) },
            )
            .unwrap();
            let rough = solve_rough(
                &lift,
                &sigma,
                &[0.3],
                &SolverConfig { sewing_level: level, ..SolverConfig::new(0.45, 0.4, 1e-13) },
            )
            .unwrap();
            sup_diff(young.y_values(), rough.y_values())
        };
        let (coarse, fine) = (gap(4), gap(6));
        assert!(fine < 1e-4, "{profile:?}: {fine}");
        assert!(fine < 0.35 * coarse, "{profile:?}: {coarse} -> {fine}");
    }
}

#[test]
fn brownian_holder_exponent_is_calibrated() {
    let grid = Arc::new(TimeGrid::uniform(1.0, 4096).unwrap());
    let mut est: Vec<f64> = (0..21)
        .map(|seed| estimate_holder_exponent(&sample_brownian(grid.clone(), 1, seed).unwrap().to_increment()).unwrap().exponent)
        .collect();
    est.sort_by(f64::total_cmp);
    assert!((est[10] - 0.5).abs() < 0.07, "median {}", est[10]);
}

#[test]
fn solution_table_round_trips() {
    let lift = smooth_lift(16, vec![(1.0, 1.0)]);
    let sigma = SigmaField::uniform(1, 1, Profile::Sin, 1.0).unwrap();
    let sol = solve_rough(&lift, &sigma, &[0.1], &SolverConfig::new(0.45, 0.4, 1e-12)).unwrap();
    let table: Table = sol.table(true);
    let mut buf = Vec::new();
    table.write(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,y_1,ytilde_1_1");
    for (i, line) in lines.enumerate() {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v[0].to_bits(), sol.grid().time(i).to_bits());
        assert_eq!(v[1].to_bits(), sol.y(i)[0].to_bits());
        assert_eq!(v[2].to_bits(), sol.ytilde(i, 0)[0].to_bits());
    }
    assert_eq!(sol.diagnostics_table().rows.len(), sol.intervals().len());
}
