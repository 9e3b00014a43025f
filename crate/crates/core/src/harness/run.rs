use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{DriverSpec, ExperimentConfig, ExperimentKind};
use super::criteria::{covariance_check, evaluate, rk4_distance, self_convergence, convergence_record, ConvergenceRun};
use super::manifest::{CheckRecord, RunManifest};
use super::output::{emit_csv, format_f64, Table};
use crate::error::{invalid, Error, Result};
use crate::laplace::KernelMeasure;
use crate::lift::{DriverPath, RoughLift};
use crate::solver::{solve, SigmaField, Solution, SolverConfig};

/// Environment variable overriding the output directory of a run.
pub const OUT_ENV: &str = "ROUGH_VOLTERRA_OUT";

const DEFAULT_OUT: &str = "rough-volterra-out";

const ALGEBRA_RECORDS: [&str; 4] = ["delta-delta", "twisted-delta-delta", "chen", "chasles"];

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// `--out`; wins over the environment variable and the config.
    pub out: Option<PathBuf>,
    /// Value of [`OUT_ENV`], if set.
    pub env_out: Option<PathBuf>,
    /// `--check` names; empty means every check of the run.
    pub checks: Vec<String>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub out_dir: PathBuf,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.manifest.all_passed() {
            0
        } else {
            1
        }
    }
}

/// Exit status for a run that stopped with an error: 2 for input
/// problems, 3 for numerical failures.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) | Error::ShapeMismatch(_) => 2,
        _ => 3,
    }
}

/// Reads, validates and executes the config at `path`.
pub fn run_file(path: &Path, options: &RunOptions) -> Result<RunOutcome> {
    let bytes = std::fs::read(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::InvalidInput("config is not UTF-8".into()))?;
    let config = ExperimentConfig::from_json(&text)?;
    run_config(&config, &bytes, options)
}

/// Executes an already parsed config; `raw` is hashed into the manifest.
pub fn run_config(config: &ExperimentConfig, raw: &[u8], options: &RunOptions) -> Result<RunOutcome> {
    config.validate()?;
    let known = check_names(config);
    for name in &options.checks {
        if !known.contains(name) {
            return invalid(format!("check `{name}` is not part of this run (available: {})", known.join(", ")));
        }
    }
    let out_dir = options
        .out
        .clone()
        .or_else(|| options.env_out.clone())
        .or_else(|| config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", out_dir.display())))?;

    let start = Instant::now();
    let mut run = Run { config, out_dir: &out_dir, wanted: &options.checks, manifest: RunManifest::new(raw, config.kind) };
    match config.kind {
        ExperimentKind::Verify => run.verify()?,
        ExperimentKind::SolveYoung | ExperimentKind::SolveRough => run.solve()?,
        ExperimentKind::Ensemble => run.ensemble()?,
        ExperimentKind::Convergence => run.convergence()?,
        ExperimentKind::CovarianceCheck => run.covariance()?,
    }
    let mut manifest = run.manifest;
    manifest.artifacts.sort();
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    manifest.write(&out_dir.join("manifest.json"))?;
    Ok(RunOutcome { manifest, out_dir })
}

/// Names of the checks a config enables, in manifest order.
pub fn check_names(config: &ExperimentConfig) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    match config.kind {
        ExperimentKind::Verify => {
            for c in &config.checks {
                if c.name() == "algebra" {
                    names.push("algebra".into());
                    names.extend(ALGEBRA_RECORDS.map(String::from));
                } else {
                    names.push(c.name().to_string());
                }
            }
        }
        ExperimentKind::SolveYoung | ExperimentKind::SolveRough => {
            if config.oracle.is_some() {
                names.push("ac5".into());
            }
        }
        ExperimentKind::Ensemble => {}
        ExperimentKind::Convergence => names.push("ac7".into()),
        ExperimentKind::CovarianceCheck => names.push("ac6".into()),
    }
    if config.residual_tolerance.is_some() && config.kind != ExperimentKind::Verify {
        names.push("picard-residual".into());
    }
    names
}

struct Run<'a> {
    config: &'a ExperimentConfig,
    out_dir: &'a Path,
    wanted: &'a [String],
    manifest: RunManifest,
}

/// Everything a solve needs, built from the config before any work starts.
struct SolveSetup {
    measure: Arc<KernelMeasure>,
    drivers: Vec<Arc<DriverPath>>,
    sigma: SigmaField,
    initial: Vec<f64>,
    solver: SolverConfig,
    lift_gamma: f64,
}

impl Run<'_> {
    fn wants(&self, name: &str) -> bool {
        self.wanted.is_empty() || self.wanted.iter().any(|w| w == name)
    }

    fn record(&mut self, check: CheckRecord) -> Result<()> {
        if self.wants(&check.name) {
            self.manifest.record(check)?;
        }
        Ok(())
    }

    fn emit(&mut self, table: &Table, name: &str) -> Result<()> {
        emit_csv(table, &self.out_dir.join(name))?;
        self.manifest.artifacts.push(name.to_string());
        Ok(())
    }

    fn setup(&self) -> Result<SolveSetup> {
        let c = self.config;
        let (Some(kernel), Some(driver), Some(sigma), Some(initial), Some(solver)) =
            (&c.kernel, &c.driver, &c.sigma, &c.initial, &c.solver)
        else {
            return invalid("solve runs need kernel, driver, sigma, initial and solver");
        };
        let measure = kernel.build()?;
        let drivers = driver.seeds()?.into_iter().map(|s| driver.build(s).map(Arc::new)).collect::<Result<Vec<_>>>()?;
        let n = drivers[0].dims();
        let mut solver = solver.clone();
        match c.kind {
            ExperimentKind::SolveYoung => solver.young = true,
            ExperimentKind::SolveRough => solver.young = false,
            _ => {}
        }
        solver.validate()?;
        Ok(SolveSetup {
            sigma: sigma.build(n, initial.len())?,
            initial: initial.clone(),
            lift_gamma: c.lift_gamma.unwrap_or(solver.gamma),
            measure,
            drivers,
            solver,
        })
    }

    fn solve_one(setup: &SolveSetup, driver: &Arc<DriverPath>) -> Result<Solution> {
        let lift = RoughLift::new(driver.clone(), setup.measure.clone(), setup.lift_gamma)?;
        solve(&lift, &setup.sigma, &setup.initial, &setup.solver)
    }

    fn record_residual(&mut self, solutions: &[Solution]) -> Result<()> {
        if let Some(tol) = self.config.residual_tolerance {
            let worst = solutions.iter().map(Solution::picard_residual).fold(0.0, f64::max);
            self.record(CheckRecord::at_most("picard-residual", worst, tol, "sup over the fine mesh and all solves"))?;
        }
        Ok(())
    }

    fn verify(&mut self) -> Result<()> {
        let mut table = Table::new(["name", "passed", "measured", "threshold"]);
        for spec in &self.config.checks {
            let name = spec.name();
            let subnames: &[&str] = if name == "algebra" { &ALGEBRA_RECORDS } else { &[] };
            if !self.wants(name) && !subnames.iter().any(|n| self.wants(n)) {
                continue;
            }
            let records = evaluate(spec)?;
            for r in records {
                if self.wants(name) || self.wants(&r.name) {
                    table.push(vec![r.name.clone(), r.passed.to_string(), format_f64(r.measured), format_f64(r.threshold)]);
                    self.manifest.record(r)?;
                }
            }
        }
        self.emit(&table, "checks.csv")
    }

    fn solve(&mut self) -> Result<()> {
        let setup = self.setup()?;
        let solutions = setup.drivers.par_iter().map(|d| Self::solve_one(&setup, d)).collect::<Result<Vec<_>>>()?;
        let many = setup.drivers.len() > 1;
        let mut worst_oracle = 0.0f64;
        for (driver, sol) in setup.drivers.iter().zip(&solutions) {
            let suffix = match (many, driver.seed()) {
                (true, Some(s)) => format!("_seed{s}"),
                _ => String::new(),
            };
            let mut table = sol.table(self.config.export_atoms);
            if let Some(oracle) = &self.config.oracle {
                let ys = super::oracle::rk4_augmented(driver, &setup.measure, &setup.sigma, &setup.initial, oracle.rk4_dt)?;
                table.header.extend((1..=sol.d()).map(|j| format!("rk4_y_{j}")));
                for (row, y) in table.rows.iter_mut().zip(&ys) {
                    row.extend(y.iter().copied().map(format_f64));
                }
                let e = rk4_distance(driver, &setup.measure, &setup.sigma, &setup.initial, oracle.rk4_dt, |i| {
                    sol.y(i).to_vec()
                })?;
                worst_oracle = worst_oracle.max(e);
            }
            self.emit(&table, &format!("solution{suffix}.csv"))?;
            self.emit(&sol.diagnostics_table(), &format!("diagnostics{suffix}.csv"))?;
            let mut buf = Vec::new();
            driver.write_csv(&mut buf)?;
            let name = format!("driver{suffix}.csv");
            std::fs::write(self.out_dir.join(&name), buf)
                .map_err(|e| Error::InvalidInput(format!("cannot write {name}: {e}")))?;
            self.manifest.artifacts.push(name);
        }
        if let Some(oracle) = &self.config.oracle {
            self.record(CheckRecord::at_most("ac5", worst_oracle, oracle.tolerance, "sup |y - y_rk4| on the driver grid"))?;
        }
        self.record_residual(&solutions)
    }

    fn ensemble(&mut self) -> Result<()> {
        let setup = self.setup()?;
        let solutions = setup.drivers.par_iter().map(|d| Self::solve_one(&setup, d)).collect::<Result<Vec<_>>>()?;
        let d = setup.initial.len();
        let mut header = vec!["seed".to_string(), "t".to_string()];
        header.extend((1..=d).map(|j| format!("y_{j}")));
        header.extend(["intervals".to_string(), "iterations".to_string()]);
        let mut rows: Vec<(u64, Vec<String>)> = Vec::new();
        let mut finals: Vec<Vec<f64>> = Vec::new();
        for (driver, sol) in setup.drivers.iter().zip(&solutions) {
            let last = sol.grid().len() - 1;
            let seed = driver.seed().unwrap_or(0);
            let mut row = vec![seed.to_string(), format_f64(sol.grid().time(last))];
            row.extend(sol.y(last).iter().copied().map(format_f64));
            row.push(sol.intervals().len().to_string());
            row.push(sol.intervals().iter().map(|r| r.iterations).sum::<usize>().to_string());
            rows.push((seed, row));
            finals.push(sol.y(last).to_vec());
        }
        rows.sort_by_key(|r| r.0);
        let mut table = Table::new(header);
        for (_, row) in rows {
            table.push(row);
        }
        self.emit(&table, "ensemble.csv")?;

        let m = finals.len() as f64;
        let mut summary = Table::new(["component", "mean", "variance", "standard_error"]);
        for j in 0..d {
            let mean = finals.iter().map(|y| y[j]).sum::<f64>() / m;
            let var = if finals.len() > 1 {
                finals.iter().map(|y| (y[j] - mean).powi(2)).sum::<f64>() / (m - 1.0)
            } else {
                0.0
            };
            summary.push(vec![(j + 1).to_string(), format_f64(mean), format_f64(var), format_f64((var / m).sqrt())]);
        }
        self.emit(&summary, "summary.csv")?;
        self.record_residual(&solutions)
    }

    fn convergence(&mut self) -> Result<()> {
        let setup = self.setup()?;
        let Some(spec) = &self.config.convergence else {
            return invalid("convergence runs need `convergence`");
        };
        if !matches!(self.config.driver, Some(DriverSpec::Fbm { .. }) | Some(DriverSpec::Brownian { .. })) {
            return invalid("convergence runs need a sampled driver");
        }
        let runs: Vec<Result<ConvergenceRun>> = setup
            .drivers
            .par_iter()
            .map(|d| self_convergence(d, &setup.measure, &setup.sigma, &setup.initial, &setup.solver, spec))
            .collect();
        // Input problems surface as errors; solver failures count against the check.
        for r in &runs {
            if let Err(e) = r {
                if error_exit_code(e) == 2 {
                    return Err(e.clone());
                }
            }
        }
        let mut diffs = Table::new(["seed", "level", "sup_difference"]);
        let mut rates = Table::new(["seed", "rate", "status"]);
        for (driver, r) in setup.drivers.iter().zip(&runs) {
            let seed = driver.seed().map(|s| s.to_string()).unwrap_or_default();
            match r {
                Ok(c) => {
                    for (level, d) in &c.differences {
                        diffs.push(vec![seed.clone(), level.to_string(), format_f64(*d)]);
                    }
                    rates.push(vec![seed, c.rate.map(format_f64).unwrap_or_default(), "ok".into()]);
                }
                Err(e) => rates.push(vec![seed, String::new(), format!("failed: {e}")]),
            }
        }
        self.emit(&diffs, "convergence.csv")?;
        self.emit(&rates, "rates.csv")?;
        self.record(convergence_record("ac7", &runs, spec))?;
        if self.config.residual_tolerance.is_some() {
            let solutions = setup.drivers.par_iter().map(|d| Self::solve_one(&setup, d)).collect::<Result<Vec<_>>>()?;
            self.record_residual(&solutions)?;
        }
        Ok(())
    }

    fn covariance(&mut self) -> Result<()> {
        let Some(spec) = &self.config.covariance else {
            return invalid("covariance-check runs need `covariance`");
        };
        let (record, est) = covariance_check("ac6", spec)?;
        let mut table = Table::new(["hurst", "xi", "eta", "samples", "estimate", "standard_error", "oracle"]);
        table.push(vec![
            format_f64(spec.hurst),
            format_f64(spec.xi),
            format_f64(spec.eta),
            spec.samples.to_string(),
            format_f64(est.estimate),
            format_f64(est.standard_error),
            format_f64(est.oracle),
        ]);
        self.emit(&table, "covariance.csv")?;
        self.record(record)
    }
}
