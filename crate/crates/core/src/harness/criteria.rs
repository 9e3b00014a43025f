//! The named checks a run can record in its manifest.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{CheckSpec, ConvergenceSpec, CovarianceSpec};
use super::manifest::CheckRecord;
use super::oracle::{rk4_augmented, x3_direct, young_quadrature};
use crate::algebra::{estimate_holder_exponent, twist, Increment1, LaplaceIncrement1, LaplaceIncrement2, Shape, TimeGrid};
use crate::error::{invalid, Result};
use crate::laplace::KernelMeasure;
use crate::lift::{wiener_cov_x1, DriverPath, FbmSampler, RoughLift};
use crate::sewing::{sewing_bound_check, SewingConfig};
use crate::solver::{solve, solve_rough, solve_rough_diffusion, young_integral, Profile, SigmaField, SolverConfig};

/// Evaluates one configured check; the algebra suite yields several records.
pub fn evaluate(spec: &CheckSpec) -> Result<Vec<CheckRecord>> {
    match spec {
        CheckSpec::Algebra { trials, seed, tolerance } => algebra_suite(*trials, *seed, *tolerance),
        CheckSpec::Ac1 { trials, points, atoms, seed, tolerance } => {
            Ok(vec![ac1(*trials, *points, *atoms, *seed, *tolerance)?])
        }
        CheckSpec::Ac2 { germs, points, mu, rho, seed } => Ok(vec![ac2(*germs, *points, *mu, *rho, *seed)?]),
        CheckSpec::Ac3 { hursts, cells, seeds, triples, sub_level, tolerance } => {
            Ok(vec![ac3(hursts, *cells, &seeds.expand()?, *triples, *sub_level, *tolerance)?])
        }
        CheckSpec::Ac4 { level, cells, tolerance } => Ok(vec![ac4(*level, *cells, *tolerance)?]),
        CheckSpec::Ac5 { cells, sewing_level, rk4_dt, solver_tolerance, tolerance } => {
            Ok(vec![ac5(*cells, *sewing_level, *rk4_dt, *solver_tolerance, *tolerance)?])
        }
        CheckSpec::Ac6 { covariance } => Ok(vec![covariance_check("ac6", covariance)?.0]),
        CheckSpec::Ac7 { hurst, gamma, kappa, solver_tolerance, seeds, convergence } => {
            Ok(vec![ac7(*hurst, *gamma, *kappa, *solver_tolerance, &seeds.expand()?, convergence)?])
        }
        CheckSpec::Ac8 { hurst, gamma, kappa, cells, sewing_level, solver_tolerance, seed } => {
            let mut config = SolverConfig::new(*gamma, *kappa, *solver_tolerance);
            config.sewing_level = *sewing_level;
            Ok(vec![ac8(*hurst, *cells, &config, *seed)?])
        }
        CheckSpec::Ac9 { hursts, points, seeds, tolerance } => Ok(vec![ac9(hursts, *points, &seeds.expand()?, *tolerance)?]),
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn random_grid(rng: &mut ChaCha8Rng, points: usize) -> Result<Arc<TimeGrid>> {
    let mut p: Vec<f64> = (1..points).map(|_| rng.gen_range(0.0..1.0)).collect();
    p.push(0.0);
    p.sort_by(f64::total_cmp);
    p.dedup();
    Ok(Arc::new(TimeGrid::new(p)?))
}

fn random_measure(rng: &mut ChaCha8Rng, atoms: usize) -> Result<Arc<KernelMeasure>> {
    let a = (0..atoms).map(|k| (k as f64 + rng.gen_range(0.0..4.0), rng.gen_range(0.1..1.0))).collect();
    Ok(Arc::new(KernelMeasure::from_atoms(a)?))
}

/// Worst `max|δδg| / max|g|` over `trials` random 1-increments.
fn delta_delta(rng: &mut ChaCha8Rng, trials: usize, points: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let grid = random_grid(rng, points)?;
        let n = grid.len();
        let values: Vec<f64> = (0..n * 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scale = max_abs(&values);
        let g = Increment1::new(grid, Shape::vector(2), values)?;
        let dd = g.delta().delta();
        for s in 0..n {
            for u in s..n {
                for t in u..n {
                    worst = worst.max(max_abs(&dd.value(s, u, t)) / scale);
                }
            }
        }
    }
    Ok(worst)
}

/// Worst `max|δ̃δ̃g̃| / max|g̃|` over random Laplace 1-increments.
fn twisted_delta_delta(rng: &mut ChaCha8Rng, trials: usize, points: usize, atoms: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let grid = random_grid(rng, points)?;
        let measure = random_measure(rng, atoms)?;
        let n = grid.len();
        let values: Vec<f64> = (0..n * atoms * 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scale = max_abs(&values);
        let g = LaplaceIncrement1::new(grid, measure, Shape::vector(2), values)?;
        let dd = g.delta_tilde().delta_tilde();
        for s in 0..n {
            for u in s..n {
                for t in u..n {
                    for k in 0..atoms {
                        worst = worst.max(max_abs(&dd.value(s, u, t, k)) / scale);
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Worst `|(δa)_{tus} - a_{tu} a_{us}|` over random triples and frequencies.
fn twist_coboundary(rng: &mut ChaCha8Rng, trials: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let mut p = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        p.sort_by(f64::total_cmp);
        let [s, u, t] = p;
        let xi = rng.gen_range(0.0..10.0);
        let lhs = twist(xi, s, t)? - twist(xi, u, t)? - twist(xi, s, u)?;
        let rhs = twist(xi, u, t)? * twist(xi, s, u)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

fn random_lift(rng: &mut ChaCha8Rng, cells: usize, atoms: usize) -> Result<RoughLift> {
    let grid = Arc::new(TimeGrid::uniform(1.0, cells)?);
    let n = grid.len();
    let mut level = [0.0, 0.0];
    let mut values = Vec::with_capacity(2 * n);
    for i in 0..n {
        if i > 0 {
            for l in &mut level {
                *l += rng.gen_range(-0.3..0.3);
            }
        }
        values.extend_from_slice(&level);
    }
    let driver = DriverPath::new(grid, 2, values, crate::lift::DriverKind::Deterministic, None)?;
    RoughLift::new(Arc::new(driver), random_measure(rng, atoms)?, 1.0)
}

fn random_triple(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    let mut p = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
    p.sort_by(f64::total_cmp);
    (p[0], p[1], p[2])
}

/// δδ = 0, δ̃δ̃ = 0, untwisted Chen for the iterated integral and twisted
/// Chasles for `x̃¹`, each relative to the size of the data involved.
pub fn algebra_suite(trials: usize, seed: u64, tolerance: f64) -> Result<Vec<CheckRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dd = delta_delta(&mut rng, trials, 16)?;
    let tdd = twisted_delta_delta(&mut rng, trials, 16, 3)?;

    let (mut chen, mut chasles) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let lift = random_lift(&mut rng, 16, 3)?;
        let (s, u, t) = random_triple(&mut rng);
        let (ts, tu, us) = (lift.area(s, t)?, lift.area(u, t)?, lift.area(s, u)?);
        let (dtu, dus) = (lift.increment(u, t)?, lift.increment(s, u)?);
        let scale = max_abs(&ts).max(1e-300);
        for i in 0..2 {
            for j in 0..2 {
                let p = i * 2 + j;
                chen = chen.max((ts[p] - tu[p] - us[p] - dtu[i] * dus[j]).abs() / scale);
            }
        }
        for (k, &(xi, _)) in lift.measure().atoms().iter().enumerate() {
            let (a, b, c) = (lift.x1_tilde(s, t, k)?, lift.x1_tilde(u, t, k)?, lift.x1_tilde(s, u, k)?);
            let scale = max_abs(&a).max(max_abs(&b)).max(max_abs(&c)).max(1e-300);
            let decay = (-xi * (t - u)).exp();
            for l in 0..2 {
                chasles = chasles.max((a[l] - b[l] - decay * c[l]).abs() / scale);
            }
        }
    }
    Ok(vec![
        CheckRecord::at_most("delta-delta", dd, tolerance, format!("{trials} random 1-increments on 16-point grids")),
        CheckRecord::at_most("twisted-delta-delta", tdd, tolerance, "3-atom Laplace increments"),
        CheckRecord::at_most("chen", chen, tolerance, "δ of the iterated integral equals δx ⊗ δx"),
        CheckRecord::at_most("chasles", chasles, tolerance, "x̃¹_ts = x̃¹_tu + e^{-ξ(t-u)} x̃¹_us"),
    ])
}

pub fn ac1(trials: usize, points: usize, atoms: usize, seed: u64, tolerance: f64) -> Result<CheckRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dd = delta_delta(&mut rng, trials, points)?;
    let tdd = twisted_delta_delta(&mut rng, trials, points, atoms)?;
    let tw = twist_coboundary(&mut rng, trials)?;
    let worst = dd.max(tdd).max(tw);
    Ok(CheckRecord::at_most("ac1", worst, tolerance, format!("δδ {dd:.3e}, δ̃δ̃ {tdd:.3e}, δa {tw:.3e}")))
}

/// Counts germs `B_{ts} = (t-s)^{1.6} · noise` violating the discrete sewing bound.
pub fn ac2(germs: usize, points: usize, mu: f64, rho: f64, seed: u64) -> Result<CheckRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    let mut c = 0.0;
    for _ in 0..germs {
        let grid = random_grid(&mut rng, points)?;
        let measure = random_measure(&mut rng, 3)?;
        let n = grid.len();
        let noise: Vec<f64> = (0..n * n * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = grid.clone();
        let b = LaplaceIncrement2::from_fn(grid, measure, Shape::scalar(), move |s, t, k| {
            vec![(g.time(t) - g.time(s)).powf(1.6) * noise[(s * n + t) * 3 + k]]
        });
        let r = sewing_bound_check(&b, 1.0, mu, rho)?;
        c = r.c_mu;
        if !r.holds {
            violations += 1;
        }
        if r.norm_h > 0.0 {
            worst = worst.max(r.lhs / (r.c_mu * r.norm_h));
        }
    }
    Ok(CheckRecord::at_most(
        "ac2",
        violations as f64,
        0.0,
        format!("c_mu = {c:.6}; worst ‖Λ̃h‖/(c_mu N[h]) = {worst:.4}"),
    ))
}

/// `x̃³` from the Chen identity against the sub-mesh double integral.
pub fn ac3(hursts: &[f64], cells: usize, seeds: &[u64], triples: usize, sub_level: u32, tolerance: f64) -> Result<CheckRecord> {
    let sub = 1usize << sub_level;
    if cells == 0 || sub % cells != 0 {
        return invalid(format!("2^{sub_level} sub-cells are not a multiple of {cells} cells"));
    }
    let refine = sub / cells;
    let measure = Arc::new(KernelMeasure::from_atoms(vec![(0.5, 1.0), (2.0, 0.5), (8.0, 0.25)])?);
    let grid = Arc::new(TimeGrid::uniform(1.0, cells)?);
    let mut worst = 0.0f64;
    for &h in hursts {
        let sampler = FbmSampler::new(h, grid.clone())?;
        let errs: Vec<Result<f64>> = seeds
            .par_iter()
            .map(|&seed| {
                let driver = Arc::new(sampler.sample(2, seed)?);
                let lift = RoughLift::new(driver.clone(), measure.clone(), (h - 0.05).max(0.34))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c4e1);
                let mut worst = 0.0f64;
                for _ in 0..triples {
                    let mut idx = [0usize; 3];
                    while !(idx[0] < idx[1] && idx[1] < idx[2]) {
                        idx = [0, 0, 0].map(|_| rng.gen_range(0..=cells));
                        idx.sort_unstable();
                    }
                    let [s, u, t] = idx;
                    let direct = x3_direct(&driver, &measure, s, u, t, refine)?;
                    let mut chen = Vec::with_capacity(direct.len());
                    for k in 0..measure.len() {
                        chen.extend(lift.x3_tilde(grid.time(s), grid.time(u), grid.time(t), k)?);
                    }
                    let diff: Vec<f64> = chen.iter().zip(&direct).map(|(a, b)| a - b).collect();
                    worst = worst.max(max_abs(&diff) / max_abs(&direct).max(1e-300));
                }
                Ok(worst)
            })
            .collect();
        for e in errs {
            worst = worst.max(e?);
        }
    }
    Ok(CheckRecord::at_most(
        "ac3",
        worst,
        tolerance,
        format!("{} seeds x {} Hurst indices, {triples} triples each, 2^{sub_level} sub-mesh", seeds.len(), hursts.len()),
    ))
}

/// Level-`level` compensated Young sums of `∫ e^{-ξ(1-v)} v dx_v` for
/// `x = v` and `x = sin v`, `ξ ∈ {0, 1, 5}`, against quadrature.
///
/// The raw sum is what is compared; the Richardson value is reported in the detail.
pub fn ac4(level: u32, cells: usize, tolerance: f64) -> Result<CheckRecord> {
    let measure = Arc::new(KernelMeasure::from_atoms(vec![(0.0, 1.0), (1.0, 1.0), (5.0, 1.0)])?);
    let grid = Arc::new(TimeGrid::uniform(1.0, cells)?);
    let config = SewingConfig { max_level: level, abs_tol: 0.0, rel_tol: 0.0 };
    type Pair = (fn(f64) -> f64, fn(f64) -> f64);
    let drivers: [(&str, Pair); 2] = [("x=v", (|v| v, |_| 1.0)), ("x=sin v", (f64::sin, f64::cos))];
    let (mut raw, mut extra) = (0.0f64, 0.0f64);
    for (_, (x, dx)) in drivers {
        let driver = Arc::new(DriverPath::from_fn(grid.clone(), 1, |t| vec![x(t)])?);
        let lift = RoughLift::new(driver, measure.clone(), 1.0)?;
        for (k, &(xi, _)) in measure.atoms().iter().enumerate() {
            let oracle = young_quadrature(xi, 1.0, |v| v, dx)?;
            let r = young_integral(&lift, |t| vec![t], 1, 0.0, 1.0, k, &config)?;
            raw = raw.max((r.value[0] - oracle).abs() / oracle.abs());
            extra = extra.max((r.diagnostics.extrapolated[0] - oracle).abs() / oracle.abs());
        }
    }
    Ok(CheckRecord::at_most("ac4", raw, tolerance, format!("raw level-{level} sums; Richardson value reaches {extra:.3e}")))
}

/// Sup distance between a solution and the RK4 oracle on the grid.
pub fn rk4_distance(
    driver: &DriverPath,
    measure: &KernelMeasure,
    sigma: &SigmaField,
    a: &[f64],
    dt: f64,
    y: impl Fn(usize) -> Vec<f64>,
) -> Result<f64> {
    let oracle = rk4_augmented(driver, measure, sigma, a, dt)?;
    Ok(oracle
        .iter()
        .enumerate()
        .flat_map(|(i, o)| y(i).iter().zip(o).map(|(p, q)| (p - q).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max))
}

/// Young (γ = 1) and rough solves with measure `{(1, 1)}` against RK4, for
/// constant, linear and sine σ along `x_t = sin 2t`.
pub fn ac5(cells: usize, sewing_level: u32, rk4_dt: f64, solver_tolerance: f64, tolerance: f64) -> Result<CheckRecord> {
    let grid = Arc::new(TimeGrid::uniform(1.0, cells)?);
    let driver = Arc::new(DriverPath::from_fn(grid, 1, |t| vec![(2.0 * t).sin()])?);
    let measure = Arc::new(KernelMeasure::point_mass(1.0, 1.0)?);
    let lift = RoughLift::new(driver.clone(), measure.clone(), 1.0)?;
    let a = [0.5];
    let sigmas = [
        ("constant", SigmaField::constant(1, 1, vec![0.8])?),
        ("linear", SigmaField::uniform(1, 1, Profile::Linear, 1.0)?),
        ("sin", SigmaField::uniform(1, 1, Profile::Sin, 1.0)?),
    ];
    let young = SolverConfig { young: true, sewing_level, ..SolverConfig::new(1.0, 0.9, solver_tolerance) };
    let rough = SolverConfig { sewing_level, ..SolverConfig::new(0.45, 0.4, solver_tolerance) };
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for (name, sigma) in &sigmas {
        for (mode, config) in [("young", &young), ("rough", &rough)] {
            let sol = solve(&lift, sigma, &a, config)?;
            let e = rk4_distance(&driver, &measure, sigma, &a, rk4_dt, |i| sol.y(i).to_vec())?;
            detail.push(format!("{mode}/{name} {e:.2e}"));
            worst = worst.max(e);
        }
    }
    Ok(CheckRecord::at_most("ac5", worst, tolerance, detail.join(", ")))
}

/// Summary of a Monte-Carlo covariance run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub oracle: f64,
}

/// Sample covariance of `x̃¹_{T0}(ξ)` and `x̃¹_{T0}(η)` over piecewise-linear
/// fBm lifts, against the Wiener-integral covariance.
pub fn covariance_check(name: &str, spec: &CovarianceSpec) -> Result<(CheckRecord, CovarianceEstimate)> {
    if spec.samples < 2 {
        return invalid("the covariance check needs at least two samples");
    }
    let grid = Arc::new(TimeGrid::uniform(1.0, spec.cells)?);
    let sampler = FbmSampler::new(spec.hurst, grid)?;
    let atoms = if spec.xi == spec.eta { vec![(spec.xi, 1.0)] } else { vec![(spec.xi, 1.0), (spec.eta, 1.0)] };
    let measure = Arc::new(KernelMeasure::from_atoms(atoms)?);
    let index = |x: f64| measure.atoms().iter().position(|a| a.0 == x).unwrap_or(0);
    let (k_xi, k_eta) = (index(spec.xi), index(spec.eta));
    let pairs: Vec<Result<(f64, f64)>> = (0..spec.samples as u64)
        .into_par_iter()
        .map(|i| {
            let driver = Arc::new(sampler.sample(1, spec.base_seed.wrapping_add(i))?);
            let lift = RoughLift::new(driver, measure.clone(), (spec.hurst - 0.05).min(1.0))?;
            let all = lift.x1_tilde_all(0.0, 1.0)?;
            Ok((all[k_xi], all[k_eta]))
        })
        .collect();
    let pairs: Vec<(f64, f64)> = pairs.into_iter().collect::<Result<_>>()?;
    let m = pairs.len() as f64;
    let (mx, my) = (pairs.iter().map(|p| p.0).sum::<f64>() / m, pairs.iter().map(|p| p.1).sum::<f64>() / m);
    let prods: Vec<f64> = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).collect();
    let estimate = prods.iter().sum::<f64>() / (m - 1.0);
    let mean_p = prods.iter().sum::<f64>() / m;
    let var_p = prods.iter().map(|p| (p - mean_p).powi(2)).sum::<f64>() / (m - 1.0);
    let standard_error = (var_p / m).sqrt();
    let oracle = wiener_cov_x1(spec.hurst, spec.xi, spec.eta, (0.0, 1.0), (0.0, 1.0))?;
    let z = (estimate - oracle).abs() / standard_error;
    let record = CheckRecord::at_most(
        name,
        z,
        spec.max_standard_errors,
        format!("estimate {estimate:.6e} ± {standard_error:.2e}, oracle {oracle:.6e}, {} samples", spec.samples),
    );
    Ok((record, CovarianceEstimate { estimate, standard_error, oracle }))
}

/// Self-convergence of one sampled driver across dyadic grids.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRun {
    pub seed: Option<u64>,
    /// `(level, sup |y_level - y_{level+1}|)` on the coarsest grid.
    pub differences: Vec<(u32, f64)>,
    /// Least-squares slope of `-log2` of the differences against the level.
    pub rate: Option<f64>,
}

/// Solves on the dyadic subsamples `2^j` (for `j` in `spec.levels`) of a
/// driver sampled with `2^max` cells, each with `fine_level - j` sub-cell
/// levels so that all solves share one fine mesh.
pub fn self_convergence(
    driver: &DriverPath,
    measure: &Arc<KernelMeasure>,
    sigma: &SigmaField,
    a: &[f64],
    config: &SolverConfig,
    spec: &ConvergenceSpec,
) -> Result<ConvergenceRun> {
    let mut levels = spec.levels.clone();
    levels.sort_unstable();
    levels.dedup();
    let (Some(&lo), Some(&hi)) = (levels.first(), levels.last()) else {
        return invalid("convergence needs at least two levels");
    };
    if levels.len() < 2 || levels.windows(2).any(|w| w[1] != w[0] + 1) {
        return invalid("convergence levels must be consecutive");
    }
    if driver.grid().cells() != 1usize << hi {
        return invalid(format!("driver must have 2^{hi} cells, has {}", driver.grid().cells()));
    }
    if spec.fine_level < hi {
        return invalid("fine_level must be at least the finest grid level");
    }
    let driver_arc = Arc::new(driver.clone());
    let mut coarse: Vec<Vec<f64>> = Vec::with_capacity(levels.len());
    for &j in &levels {
        let sub = Arc::new(driver_arc.subsample(1 << (hi - j))?);
        let lift = RoughLift::new(sub, measure.clone(), config.gamma)?;
        let cfg = SolverConfig { sewing_level: spec.fine_level - j, ..config.clone() };
        let sol = solve(&lift, sigma, a, &cfg)?;
        let stride = 1usize << (j - lo);
        let pts = (1usize << lo) + 1;
        coarse.push((0..pts).flat_map(|i| sol.y(i * stride).to_vec()).collect());
    }
    let differences: Vec<(u32, f64)> = levels
        .windows(2)
        .zip(coarse.windows(2))
        .map(|(l, y)| (l[0], y[0].iter().zip(&y[1]).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)))
        .collect();
    Ok(ConvergenceRun { seed: driver.seed(), rate: fit_rate(&differences), differences })
}

fn fit_rate(points: &[(u32, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > 0.0).map(|&(l, d)| (l as f64, -d.log2())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Counts seeds whose fitted rate exceeds `spec.min_rate`.
pub fn convergence_record(name: &str, runs: &[Result<ConvergenceRun>], spec: &ConvergenceSpec) -> CheckRecord {
    let passing = runs.iter().filter(|r| matches!(r, Ok(c) if c.rate.is_some_and(|x| x > spec.min_rate))).count();
    let failed = runs.iter().filter(|r| r.is_err()).count();
    let mut rates: Vec<f64> = runs.iter().filter_map(|r| r.as_ref().ok().and_then(|c| c.rate)).collect();
    rates.sort_by(f64::total_cmp);
    let median = rates.get(rates.len() / 2).copied().unwrap_or(f64::NAN);
    CheckRecord::at_least(
        name,
        passing as f64,
        spec.min_passing as f64,
        format!("{passing}/{} seeds with rate > {}; median rate {median:.3}; {failed} solver failures", runs.len(), spec.min_rate),
    )
}

pub fn ac7(
    hurst: f64,
    gamma: f64,
    kappa: f64,
    solver_tolerance: f64,
    seeds: &[u64],
    spec: &ConvergenceSpec,
) -> Result<CheckRecord> {
    let hi = *spec.levels.iter().max().ok_or_else(|| crate::Error::InvalidInput("no levels".into()))?;
    let sampler = FbmSampler::new(hurst, Arc::new(TimeGrid::uniform(1.0, 1 << hi)?))?;
    let measure = Arc::new(KernelMeasure::point_mass(1.0, 1.0)?);
    let sigma = SigmaField::uniform(1, 1, Profile::Tanh, 1.0)?;
    let config = SolverConfig::new(gamma, kappa, solver_tolerance);
    let runs: Vec<Result<ConvergenceRun>> = seeds
        .par_iter()
        .map(|&seed| self_convergence(&sampler.sample(1, seed)?, &measure, &sigma, &[0.5], &config, spec))
        .collect();
    Ok(convergence_record("ac7", &runs, spec))
}

/// Rough solve with measure `{(0, 1)}` against the diffusion solve, bit for bit.
pub fn ac8(hurst: f64, cells: usize, config: &SolverConfig, seed: u64) -> Result<CheckRecord> {
    let grid = Arc::new(TimeGrid::uniform(1.0, cells)?);
    let driver = Arc::new(FbmSampler::new(hurst, grid)?.sample(1, seed)?);
    let sigma = SigmaField::uniform(1, 1, Profile::Sin, 1.0)?;
    let a = [0.3];
    let lift = RoughLift::new(driver.clone(), Arc::new(KernelMeasure::point_mass(0.0, 1.0)?), config.gamma)?;
    let laplace = solve_rough(&lift, &sigma, &a, config)?;
    let diffusion = solve_rough_diffusion(&driver, &sigma, &a, config)?;
    let (p, q) = (laplace.y_values(), diffusion.y_values());
    let differing = if p.len() != q.len() {
        p.len().max(q.len())
    } else {
        p.iter().zip(q).filter(|(x, y)| x.to_bits() != y.to_bits()).count()
    };
    Ok(CheckRecord::at_most("ac8", differing as f64, 0.0, format!("{} values compared", p.len())))
}

/// Median Hölder exponent estimate per Hurst index.
pub fn ac9(hursts: &[f64], points: usize, seeds: &[u64], tolerance: f64) -> Result<CheckRecord> {
    if points < 2 {
        return invalid("need at least two points");
    }
    let grid = Arc::new(TimeGrid::uniform(1.0, points - 1)?);
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for &h in hursts {
        let sampler = FbmSampler::new(h, grid.clone())?;
        let est: Vec<Result<f64>> = seeds
            .par_iter()
            .map(|&seed| Ok(estimate_holder_exponent(&sampler.sample(1, seed)?.to_increment())?.exponent))
            .collect();
        let mut est: Vec<f64> = est.into_iter().collect::<Result<_>>()?;
        est.sort_by(f64::total_cmp);
        let median = if est.len() % 2 == 1 { est[est.len() / 2] } else { 0.5 * (est[est.len() / 2 - 1] + est[est.len() / 2]) };
        detail.push(format!("H={h}: median {median:.4}"));
        worst = worst.max((median - h).abs());
    }
    Ok(CheckRecord::at_most("ac9", worst, tolerance, detail.join(", ")))
}
