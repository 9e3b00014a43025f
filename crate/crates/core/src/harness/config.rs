use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::TimeGrid;
use crate::error::{invalid, Result};
use crate::laplace::{build_quadrature, Density, KernelMeasure, QuadratureSpec};
use crate::lift::{sample_brownian, sample_fbm, DriverKind, DriverPath};
use crate::solver::{Profile, SigmaField, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Verify,
    SolveYoung,
    SolveRough,
    Convergence,
    Ensemble,
    CovarianceCheck,
}

/// `atoms: [[ξ, w], ...]` or `density: {name, params, n_nodes, tail_cut, beta, tolerance}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default)]
    pub atoms: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub density: Option<DensitySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub name: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    pub n_nodes: usize,
    #[serde(default)]
    pub tail_cut: Option<f64>,
    pub beta: f64,
    pub tolerance: f64,
}

impl KernelSpec {
    pub fn build(&self) -> Result<Arc<KernelMeasure>> {
        match (&self.atoms, &self.density) {
            (Some(atoms), None) => Ok(Arc::new(KernelMeasure::from_atoms(atoms.iter().map(|a| (a[0], a[1])).collect())?)),
            (None, Some(d)) => {
                let mut obj = d.params.clone();
                obj.insert("name".into(), serde_json::Value::String(d.name.clone()));
                let density: Density = match serde_json::from_value(serde_json::Value::Object(obj)) {
                    Ok(v) => v,
                    Err(e) => return invalid(format!("density: {e}")),
                };
                let spec = QuadratureSpec { n_nodes: d.n_nodes, tail_cut: d.tail_cut, beta: d.beta, tolerance: d.tolerance };
                Ok(Arc::new(build_quadrature(&density, &spec)?))
            }
            _ => invalid("kernel needs exactly one of `atoms` or `density`"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothFunction {
    Linear,
    Sin,
    Cos,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}

/// A seed list in the grammar of [`seed_expand`], or a bare integer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Single(u64),
    Spec(String),
}

impl SeedSpec {
    pub fn expand(&self) -> Result<Vec<u64>> {
        match self {
            SeedSpec::Single(s) => Ok(vec![*s]),
            SeedSpec::Spec(s) => seed_expand(s),
        }
    }
}

/// Provenance of a CSV driver, e.g. `{"kind": "fbm", "hurst": 0.4, "seed": 7}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverMetadata {
    #[serde(flatten)]
    pub kind: DriverKind,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriverSpec {
    /// Component `j` is `amplitude · f(frequency (j+1) t)`.
    Smooth {
        function: SmoothFunction,
        cells: usize,
        #[serde(default = "one")]
        horizon: f64,
        #[serde(default = "one_usize")]
        dims: usize,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
    },
    Brownian {
        cells: usize,
        #[serde(default = "one")]
        horizon: f64,
        #[serde(default = "one_usize")]
        dims: usize,
        seeds: SeedSpec,
    },
    Fbm {
        hurst: f64,
        cells: usize,
        #[serde(default = "one")]
        horizon: f64,
        #[serde(default = "one_usize")]
        dims: usize,
        seeds: SeedSpec,
    },
    /// A driver read from `t,x1,...,xn`; its provenance is restated here.
    Csv { path: String, metadata: DriverMetadata },
}

impl DriverSpec {
    pub fn seeds(&self) -> Result<Vec<Option<u64>>> {
        match self {
            DriverSpec::Brownian { seeds, .. } | DriverSpec::Fbm { seeds, .. } => {
                Ok(seeds.expand()?.into_iter().map(Some).collect())
            }
            DriverSpec::Csv { metadata, .. } => Ok(vec![metadata.seed]),
            DriverSpec::Smooth { .. } => Ok(vec![None]),
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, DriverSpec::Smooth { .. })
    }

    /// Builds the driver; `seed` must come from [`DriverSpec::seeds`].
    pub fn build(&self, seed: Option<u64>) -> Result<DriverPath> {
        let need_seed = || seed.ok_or_else(|| crate::Error::InvalidInput("random driver without a seed".into()));
        match *self {
            DriverSpec::Smooth { function, cells, horizon, dims, amplitude, frequency } => {
                let grid = Arc::new(TimeGrid::uniform(horizon, cells)?);
                DriverPath::from_fn(grid, dims, |t| {
                    (0..dims)
                        .map(|j| {
                            let u = frequency * (j + 1) as f64 * t;
                            amplitude
                                * match function {
                                    SmoothFunction::Linear => u,
                                    SmoothFunction::Sin => u.sin(),
                                    SmoothFunction::Cos => u.cos(),
                                }
                        })
                        .collect()
                })
            }
            DriverSpec::Brownian { cells, horizon, dims, .. } => {
                sample_brownian(Arc::new(TimeGrid::uniform(horizon, cells)?), dims, need_seed()?)
            }
            DriverSpec::Fbm { hurst, cells, horizon, dims, .. } => {
                sample_fbm(hurst, Arc::new(TimeGrid::uniform(horizon, cells)?), dims, need_seed()?)
            }
            DriverSpec::Csv { ref path, ref metadata } => {
                let file = match std::fs::File::open(path) {
                    Ok(f) => f,
                    Err(e) => return invalid(format!("cannot open driver file {path}: {e}")),
                };
                DriverPath::read_csv(file, metadata.kind, metadata.seed)
            }
        }
    }
}

/// A matrix parameter: a scalar broadcast to every entry, or `n` rows of `d` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixParam {
    Scalar(f64),
    Rows(Vec<Vec<f64>>),
}

impl MatrixParam {
    fn flatten(&self, n: usize, d: usize) -> Result<Vec<f64>> {
        match self {
            MatrixParam::Scalar(v) => Ok(vec![*v; n * d]),
            MatrixParam::Rows(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != d) {
                    return invalid(format!("σ parameter must be {n} rows of {d} values"));
                }
                Ok(rows.concat())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaName {
    Zero,
    Constant,
    Linear,
    Sin,
    TanhSaturating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaSpec {
    pub name: SigmaName,
    /// Entry value for `constant`; slope for the other families.
    #[serde(default)]
    pub scale: Option<MatrixParam>,
    #[serde(default)]
    pub offset: Option<MatrixParam>,
}

impl SigmaSpec {
    pub fn build(&self, n: usize, d: usize) -> Result<SigmaField> {
        let get = |p: &Option<MatrixParam>, default: f64| match p {
            Some(p) => p.flatten(n, d),
            None => Ok(vec![default; n * d]),
        };
        match self.name {
            SigmaName::Zero => Ok(SigmaField::zero(n, d)),
            SigmaName::Constant => match &self.scale {
                Some(p) => SigmaField::constant(n, d, p.flatten(n, d)?),
                None => invalid("constant σ needs `scale`"),
            },
            SigmaName::Linear => SigmaField::new(n, d, Profile::Linear, get(&self.scale, 1.0)?, get(&self.offset, 0.0)?),
            SigmaName::Sin => SigmaField::new(n, d, Profile::Sin, get(&self.scale, 1.0)?, get(&self.offset, 0.0)?),
            SigmaName::TanhSaturating => {
                SigmaField::new(n, d, Profile::Tanh, get(&self.scale, 1.0)?, get(&self.offset, 0.0)?)
            }
        }
    }
}

/// RK4 comparison for smooth drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub rk4_dt: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    /// Dyadic levels of the compared grids, e.g. `[7, 8, 9, 10]`.
    pub levels: Vec<u32>,
    /// Level of the common fine mesh; grid `2^j` uses `fine_level - j` sub-cell levels.
    pub fine_level: u32,
    pub min_rate: f64,
    /// Seeds that must reach `min_rate` for the check to pass.
    pub min_passing: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceSpec {
    pub hurst: f64,
    pub xi: f64,
    pub eta: f64,
    pub cells: usize,
    pub samples: usize,
    pub base_seed: u64,
    /// Allowed distance in standard errors.
    pub max_standard_errors: f64,
}

/// Parameters of the named checks of a `verify` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CheckSpec {
    /// δδ = 0, δ̃δ̃ = 0, Chen and twisted Chasles on random data.
    Algebra { trials: usize, seed: u64, tolerance: f64 },
    Ac1 { trials: usize, points: usize, atoms: usize, seed: u64, tolerance: f64 },
    Ac2 { germs: usize, points: usize, mu: f64, rho: f64, seed: u64 },
    Ac3 { hursts: Vec<f64>, cells: usize, seeds: SeedSpec, triples: usize, sub_level: u32, tolerance: f64 },
    Ac4 { level: u32, cells: usize, tolerance: f64 },
    Ac5 { cells: usize, sewing_level: u32, rk4_dt: f64, solver_tolerance: f64, tolerance: f64 },
    Ac6 { covariance: CovarianceSpec },
    Ac7 { hurst: f64, gamma: f64, kappa: f64, solver_tolerance: f64, seeds: SeedSpec, convergence: ConvergenceSpec },
    Ac8 { hurst: f64, gamma: f64, kappa: f64, cells: usize, sewing_level: u32, solver_tolerance: f64, seed: u64 },
    Ac9 { hursts: Vec<f64>, points: usize, seeds: SeedSpec, tolerance: f64 },
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::Algebra { .. } => "algebra",
            CheckSpec::Ac1 { .. } => "ac1",
            CheckSpec::Ac2 { .. } => "ac2",
            CheckSpec::Ac3 { .. } => "ac3",
            CheckSpec::Ac4 { .. } => "ac4",
            CheckSpec::Ac5 { .. } => "ac5",
            CheckSpec::Ac6 { .. } => "ac6",
            CheckSpec::Ac7 { .. } => "ac7",
            CheckSpec::Ac8 { .. } => "ac8",
            CheckSpec::Ac9 { .. } => "ac9",
        }
    }
}

/// One JSON document describing a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub driver: Option<DriverSpec>,
    #[serde(default)]
    pub sigma: Option<SigmaSpec>,
    /// `a`, the `1 x d` initial value.
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    /// Regularity flag of the lift; defaults to the solver's γ.
    #[serde(default)]
    pub lift_gamma: Option<f64>,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub convergence: Option<ConvergenceSpec>,
    #[serde(default)]
    pub covariance: Option<CovarianceSpec>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    /// Gates a `picard-residual` check on every solve of the run.
    #[serde(default)]
    pub residual_tolerance: Option<f64>,
    /// Also export `ỹ` per atom.
    #[serde(default)]
    pub export_atoms: bool,
    #[serde(default)]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        match serde_json::from_str(text) {
            Ok(c) => Ok(c),
            Err(e) => invalid(format!("config does not parse: {e}")),
        }
    }

    /// Kind-specific presence checks.
    pub fn validate(&self) -> Result<()> {
        let need = |ok: bool, what: &str| if ok { Ok(()) } else { invalid(format!("{:?} runs need `{what}`", self.kind)) };
        match self.kind {
            ExperimentKind::Verify => need(!self.checks.is_empty(), "checks")?,
            ExperimentKind::SolveYoung | ExperimentKind::SolveRough | ExperimentKind::Ensemble => {
                need(self.kernel.is_some(), "kernel")?;
                need(self.driver.is_some(), "driver")?;
                need(self.sigma.is_some(), "sigma")?;
                need(self.initial.is_some(), "initial")?;
                need(self.solver.is_some(), "solver")?;
            }
            ExperimentKind::Convergence => {
                need(self.kernel.is_some(), "kernel")?;
                need(self.driver.is_some(), "driver")?;
                need(self.sigma.is_some(), "sigma")?;
                need(self.initial.is_some(), "initial")?;
                need(self.solver.is_some(), "solver")?;
                need(self.convergence.is_some(), "convergence")?;
                if !matches!(self.driver, Some(DriverSpec::Fbm { .. }) | Some(DriverSpec::Brownian { .. })) {
                    return invalid("convergence runs need a sampled (fbm or brownian) driver");
                }
            }
            ExperimentKind::CovarianceCheck => need(self.covariance.is_some(), "covariance")?,
        }
        if let Some(s) = &self.solver {
            s.validate()?;
        }
        if let Some(d) = &self.driver {
            d.seeds()?;
        }
        if self.oracle.is_some() && !self.driver.as_ref().is_some_and(DriverSpec::is_smooth) {
            return invalid("the RK4 oracle needs a smooth driver");
        }
        for c in &self.checks {
            match c {
                CheckSpec::Ac3 { seeds, .. } | CheckSpec::Ac7 { seeds, .. } | CheckSpec::Ac9 { seeds, .. } => {
                    seeds.expand()?;
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Expands `"42"`, `"1..4"` (half-open) and comma-separated lists of both.
///
/// Empty ranges and seeds listed twice are rejected.
pub fn seed_expand(spec: &str) -> Result<Vec<u64>> {
    let mut out: Vec<u64> = Vec::new();
    let parse = |s: &str| -> Result<u64> {
        s.trim().parse::<u64>().or_else(|_| invalid(format!("bad seed `{}` in `{spec}`", s.trim())))
    };
    if spec.trim().is_empty() {
        return invalid("empty seed specification");
    }
    for item in spec.split(',') {
        let seeds: Vec<u64> = match item.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (parse(a)?, parse(b)?);
                if a >= b {
                    return invalid(format!("empty seed range `{}`", item.trim()));
                }
                (a..b).collect()
            }
            None => vec![parse(item)?],
        };
        for s in seeds {
            if out.contains(&s) {
                return invalid(format!("seed {s} appears twice in `{spec}`"));
            }
            out.push(s);
        }
    }
    Ok(out)
}
