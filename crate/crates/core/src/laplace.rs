//! Kernels `φ(v) = ∫_0^∞ e^{-vξ} φ̂(ξ) dξ` represented by finite atomic measures.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, shape, Error, Result};
use crate::quad;

/// Where the atoms of a [`KernelMeasure`] came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Provenance {
    NativeAtomic,
    QuadratureOfDensity { density: String, n_nodes: usize, tail_cut: f64, achieved_error: f64 },
}

/// Atoms `(ξ_k, w_k)` sorted by frequency, with a cache of the moments
/// `M_β = Σ |w_k| (1 + ξ_k^β)`.
pub struct KernelMeasure {
    atoms: Vec<(f64, f64)>,
    provenance: Provenance,
    beta: Option<f64>,
    moments: Mutex<HashMap<u64, f64>>,
}

impl fmt::Debug for KernelMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelMeasure")
            .field("atoms", &self.atoms)
            .field("provenance", &self.provenance)
            .field("beta", &self.beta)
            .finish()
    }
}

impl Clone for KernelMeasure {
    fn clone(&self) -> Self {
        Self {
            atoms: self.atoms.clone(),
            provenance: self.provenance.clone(),
            beta: self.beta,
            moments: Mutex::new(self.moments.lock().unwrap().clone()),
        }
    }
}

impl PartialEq for KernelMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms
    }
}

impl KernelMeasure {
    /// Native atomic measure. Atoms are sorted; repeated frequencies are rejected.
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(xi, w) in &atoms {
            if !(xi >= 0.0) || !xi.is_finite() || !w.is_finite() {
                return invalid(format!("atom ({xi}, {w}) needs a finite frequency >= 0 and a finite weight"));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = atoms.windows(2).find(|w| w[0].0 == w[1].0) {
            return invalid(format!("duplicate Laplace frequency {}", w[0].0));
        }
        Ok(Self::assemble(atoms, Provenance::NativeAtomic))
    }

    /// Single point mass `w δ_{ξ}`, i.e. the kernel `φ(v) = w e^{-ξ v}`.
    pub fn point_mass(xi: f64, w: f64) -> Result<Self> {
        Self::from_atoms(vec![(xi, w)])
    }

    fn assemble(atoms: Vec<(f64, f64)>, provenance: Provenance) -> Self {
        Self { atoms, provenance, beta: None, moments: Mutex::new(HashMap::new()) }
    }

    /// Records the moment order the active pipeline relies on.
    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.0)
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.1)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn beta(&self) -> Option<f64> {
        self.beta
    }

    /// `φ(v) = Σ_k w_k e^{-v ξ_k}`.
    pub fn phi(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) {
            return invalid(format!("kernel argument must be >= 0, got {v}"));
        }
        Ok(self.atoms.iter().map(|&(xi, w)| w * (-v * xi).exp()).sum())
    }

    /// `M_β = Σ_k |w_k| (1 + ξ_k^β)`, cached per β.
    pub fn moment(&self, beta: f64) -> Result<f64> {
        if !(beta >= 0.0) {
            return invalid(format!("moment order must be >= 0, got {beta}"));
        }
        let key = beta.to_bits();
        if let Some(&m) = self.moments.lock().unwrap().get(&key) {
            return Ok(m);
        }
        let m = self.atoms.iter().map(|&(xi, w)| w.abs() * (1.0 + xi.powf(beta))).sum();
        self.moments.lock().unwrap().insert(key, m);
        Ok(m)
    }

    /// `Σ_k w_k g̃(ξ_k)` where `values` holds one block per atom.
    pub fn project(&self, values: &[f64]) -> Result<Vec<f64>> {
        if self.is_empty() || values.len() % self.len() != 0 {
            return shape(format!("{} values do not split over {} atoms", values.len(), self.len()));
        }
        let d = values.len() / self.len();
        let mut out = vec![0.0; d];
        for (&(_, w), block) in self.atoms.iter().zip(values.chunks(d.max(1))) {
            for (o, v) in out.iter_mut().zip(block) {
                *o += w * v;
            }
        }
        Ok(out)
    }
}

/// Free-function form of [`KernelMeasure::phi`].
pub fn phi_eval(measure: &KernelMeasure, v: f64) -> Result<f64> {
    measure.phi(v)
}

/// Free-function form of [`KernelMeasure::moment`].
pub fn moment_check(measure: &KernelMeasure, beta: f64) -> Result<f64> {
    measure.moment(beta)
}

/// Free-function form of [`KernelMeasure::project`].
pub fn project(values: &[f64], measure: &KernelMeasure) -> Result<Vec<f64>> {
    measure.project(values)
}

/// Shipped Laplace densities with closed-form transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Density {
    /// `φ̂(ξ) = c e^{-λξ}`, so `φ(v) = c / (λ + v)`.
    Exp { c: f64, lambda: f64 },
    /// `φ̂(ξ) = c ξ^{α-1} e^{-λξ}`, so `φ(v) = c Γ(α) / (λ + v)^α`.
    Gamma { c: f64, alpha: f64, lambda: f64 },
    /// `w δ_ξ`; passed through without quadrature.
    PointMass { xi: f64, w: f64 },
}

impl Density {
    pub fn eval(&self, xi: f64) -> f64 {
        match *self {
            Density::Exp { c, lambda } => c * (-lambda * xi).exp(),
            Density::Gamma { c, alpha, lambda } => c * xi.powf(alpha - 1.0) * (-lambda * xi).exp(),
            Density::PointMass { .. } => 0.0,
        }
    }

    /// Exact transform `φ(v)`.
    pub fn phi(&self, v: f64) -> f64 {
        match *self {
            Density::Exp { c, lambda } => c / (lambda + v),
            Density::Gamma { c, alpha, lambda } => c * gamma(alpha) / (lambda + v).powf(alpha),
            Density::PointMass { xi, w } => w * (-xi * v).exp(),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Density::Exp { .. } => "exp",
            Density::Gamma { .. } => "gamma",
            Density::PointMass { .. } => "point-mass",
        }
    }

    fn decay(&self) -> f64 {
        match *self {
            Density::Exp { lambda, .. } | Density::Gamma { lambda, .. } => lambda,
            Density::PointMass { .. } => 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Density::Exp { c, lambda } => c.is_finite() && lambda > 0.0 && lambda.is_finite(),
            Density::Gamma { c, alpha, lambda } => c.is_finite() && alpha > 0.0 && lambda > 0.0 && lambda.is_finite(),
            Density::PointMass { xi, w } => xi >= 0.0 && xi.is_finite() && w.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("density parameters out of range: {self:?}"))
        }
    }
}

/// Parameters of [`build_quadrature`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Total node count; a multiple of 8 (one 8-point panel per block).
    pub n_nodes: usize,
    /// Upper truncation of the ξ-integral; `None` uses `50 / decay`.
    pub tail_cut: Option<f64>,
    /// Moment order recorded on the measure.
    pub beta: f64,
    /// Maximum reconstruction error of φ on the validation set.
    pub tolerance: f64,
}

/// Points at which a quadrature measure is checked against the exact transform.
pub const VALIDATION_POINTS: [f64; 3] = [0.1, 1.0, 10.0];

/// Composite Gauss–Legendre nodes on geometrically graded panels
/// `[0, T 2^{1-P}], [T 2^{1-P}, T 2^{2-P}], ..., [T/2, T]`.
fn graded_nodes(n_nodes: usize, tail_cut: f64) -> Vec<(f64, f64)> {
    let panels = n_nodes / 8;
    let edge = |i: usize| if i == 0 { 0.0 } else { tail_cut * 0.5f64.powi((panels - i) as i32) };
    (0..panels).flat_map(|i| quad::gl8(edge(i), edge(i + 1))).collect()
}

fn check_spec(spec: &QuadratureSpec) -> Result<()> {
    if spec.n_nodes == 0 || spec.n_nodes % 8 != 0 {
        return invalid(format!("n_nodes must be a positive multiple of 8, got {}", spec.n_nodes));
    }
    if !(spec.tolerance > 0.0) {
        return invalid("quadrature tolerance must be positive");
    }
    if let Some(t) = spec.tail_cut {
        if !(t > 0.0) || !t.is_finite() {
            return invalid(format!("tail_cut must be positive and finite, got {t}"));
        }
    }
    Ok(())
}

/// Discretize a catalog density into atoms and validate φ against its
/// closed form at [`VALIDATION_POINTS`].
pub fn build_quadrature(density: &Density, spec: &QuadratureSpec) -> Result<KernelMeasure> {
    density.validate()?;
    if let Density::PointMass { xi, w } = *density {
        return Ok(KernelMeasure::point_mass(xi, w)?.with_beta(spec.beta));
    }
    check_spec(spec)?;
    let tail_cut = spec.tail_cut.unwrap_or(50.0 / density.decay());
    let atoms: Vec<(f64, f64)> =
        graded_nodes(spec.n_nodes, tail_cut).into_iter().map(|(xi, w)| (xi, w * density.eval(xi))).collect();
    let mut m = KernelMeasure::from_atoms(atoms)?;
    let achieved = VALIDATION_POINTS
        .iter()
        .map(|&v| (m.phi(v).unwrap() - density.phi(v)).abs())
        .fold(0.0, f64::max);
    if !(achieved <= spec.tolerance) {
        return Err(Error::Quadrature { achieved, tolerance: spec.tolerance });
    }
    m.provenance = Provenance::QuadratureOfDensity {
        density: density.name().to_string(),
        n_nodes: spec.n_nodes,
        tail_cut,
        achieved_error: achieved,
    };
    Ok(m.with_beta(spec.beta))
}

/// Discretize an arbitrary density on `[0, tail_cut]`; the reconstruction is
/// validated against adaptive quadrature of the truncated transform.
pub fn build_quadrature_fn(
    density: impl Fn(f64) -> f64,
    n_nodes: usize,
    tail_cut: f64,
    beta: f64,
    tolerance: f64,
) -> Result<KernelMeasure> {
    check_spec(&QuadratureSpec { n_nodes, tail_cut: Some(tail_cut), beta, tolerance })?;
    let atoms: Vec<(f64, f64)> =
        graded_nodes(n_nodes, tail_cut).into_iter().map(|(xi, w)| (xi, w * density(xi))).collect();
    let mut m = KernelMeasure::from_atoms(atoms)?;
    let mut achieved = 0.0f64;
    for &v in &VALIDATION_POINTS {
        let exact = quad::integrate(|xi| (-v * xi).exp() * density(xi), 0.0, tail_cut, 1e-14, 1e-13).value;
        achieved = achieved.max((m.phi(v)? - exact).abs());
    }
    if !(achieved <= tolerance) {
        return Err(Error::Quadrature { achieved, tolerance });
    }
    m.provenance = Provenance::QuadratureOfDensity {
        density: "custom".to_string(),
        n_nodes,
        tail_cut,
        achieved_error: achieved,
    };
    Ok(m.with_beta(beta))
}

/// Shared handle used throughout the crate.
pub type SharedMeasure = Arc<KernelMeasure>;

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, tail: f64) -> QuadratureSpec {
        QuadratureSpec { n_nodes: n, tail_cut: Some(tail), beta: 2.0, tolerance: 1e-8 }
    }

    #[test]
    fn exp_density_reconstructs() {
        let m = build_quadrature(&Density::Exp { c: 1.0, lambda: 1.0 }, &spec(64, 40.0)).unwrap();
        assert!((m.phi(1.0).unwrap() - 0.5).abs() < 1e-8);
        assert_eq!(m.len(), 64);
        assert!(matches!(m.provenance(), Provenance::QuadratureOfDensity { .. }));
    }

    #[test]
    fn gamma_density_reconstructs() {
        let d = Density::Gamma { c: 1.0, alpha: 2.0, lambda: 1.0 };
        let m = build_quadrature(&d, &spec(64, 40.0)).unwrap();
        assert!((m.phi(1.0).unwrap() - 0.25).abs() < 1e-8);
    }

    #[test]
    fn point_mass_passes_through() {
        let m = build_quadrature(&Density::PointMass { xi: 2.0, w: 0.5 }, &spec(64, 40.0)).unwrap();
        assert_eq!(m.atoms(), &[(2.0, 0.5)]);
        assert_eq!(m.provenance(), &Provenance::NativeAtomic);
    }

    #[test]
    fn too_few_nodes_fail_with_achieved_error() {
        let err = build_quadrature(&Density::Exp { c: 1.0, lambda: 1.0 }, &spec(8, 40.0)).unwrap_err();
        assert!(matches!(err, Error::Quadrature { achieved, .. } if achieved > 1e-8));
    }

    #[test]
    fn custom_density_matches_catalog() {
        let m = build_quadrature_fn(|x| (-x).exp(), 64, 40.0, 1.0, 1e-8).unwrap();
        assert!((m.phi(1.0).unwrap() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn phi_examples() {
        let m = KernelMeasure::point_mass(1.0, 1.0).unwrap();
        assert_eq!(m.phi(0.0).unwrap(), 1.0);
        assert!((m.phi(1.0).unwrap() - 0.36787944117144233).abs() < 1e-15);
        assert!(m.phi(-1.0).is_err());
        let one = KernelMeasure::point_mass(0.0, 1.0).unwrap();
        assert_eq!(one.phi(7.5).unwrap(), 1.0);
    }

    #[test]
    fn moment_examples() {
        assert_eq!(KernelMeasure::point_mass(1.0, 1.0).unwrap().moment(2.0).unwrap(), 2.0);
        let m = KernelMeasure::from_atoms(vec![(4.0, -0.5), (2.0, 0.5)]).unwrap();
        assert_eq!(m.moment(1.0).unwrap(), 4.0);
        assert_eq!(m.moment(1.0).unwrap(), 4.0);
        assert_eq!(KernelMeasure::from_atoms(vec![]).unwrap().moment(1.0).unwrap(), 0.0);
    }

    #[test]
    fn project_examples() {
        let m = KernelMeasure::from_atoms(vec![(3.0, -1.0), (1.0, 2.0)]).unwrap();
        assert_eq!(m.project(&[1.0, 4.0]).unwrap(), vec![-2.0]);
        assert_eq!(m.project(&[0.0, 0.0]).unwrap(), vec![0.0]);
        let single = KernelMeasure::point_mass(0.7, 1.0).unwrap();
        assert_eq!(single.project(&[3.5, -1.0]).unwrap(), vec![3.5, -1.0]);
        assert!(m.project(&[1.0, 2.0, 3.0]).is_err());
        let cancel = KernelMeasure::from_atoms(vec![(1.0, 0.5), (2.0, -0.5)]).unwrap();
        assert_eq!(cancel.project(&[1.25, 1.25]).unwrap(), vec![0.0]);
    }

    #[test]
    fn rejects_bad_atoms() {
        assert!(KernelMeasure::from_atoms(vec![(-1.0, 1.0)]).is_err());
        assert!(KernelMeasure::from_atoms(vec![(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(KernelMeasure::from_atoms(vec![(f64::INFINITY, 1.0)]).is_err());
    }
}
