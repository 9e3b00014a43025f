//! Interval-patching Picard iteration on the fine mesh.
//!
//! On a sub-cell `[t_j, t_{j+1}]` the map `Γ` advances every atom by
//! `ỹ_{j+1} = e^{-ξ h_j} ỹ_j + x̃¹_j z_j + x̃²_j·ζ^{z*}_j` with `z = σ(y)` and
//! `ζ^z = ζ Dσ(y)*` taken from the previous iterate. A sweep is one pass of
//! `Γ` over an interval; intervals are chained by the twisted Chasles
//! relation, i.e. the next interval starts from the last node's `ỹ`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::controlled::LaplaceControlledPath;
use super::sigma::SigmaField;
use super::tables::{classical_tables, laplace_tables, Tables};
use crate::algebra::{euclid, TimeGrid};
use crate::error::{invalid, shape, Error, Result};
use crate::harness::{format_f64, Table};
use crate::laplace::KernelMeasure;
use crate::lift::{DriverPath, RoughLift};

/// Atoms at or above this count are swept in parallel.
const PARALLEL_ATOMS: usize = 4;
/// Nodes per interval used for the discrete norm diagnostics.
const SAMPLE_NODES: usize = 33;

fn default_level() -> u32 {
    6
}
fn default_max_iterations() -> usize {
    200
}
fn default_n_start() -> usize {
    1
}
fn default_n_growth() -> usize {
    2
}
fn default_n_cap() -> usize {
    1 << 16
}
fn default_min_interval() -> f64 {
    1e-9
}
fn default_true() -> bool {
    true
}

/// Parameters of [`solve_young`] and [`solve_rough`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub gamma: f64,
    pub kappa: f64,
    /// Each driver cell is split into `2^sewing_level` sub-cells.
    #[serde(default = "default_level")]
    pub sewing_level: u32,
    /// Picard stopping threshold on the distance between successive sweeps.
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Initial `N` in the interval lengths `1/(N+n)`.
    #[serde(default = "default_n_start")]
    pub n_start: usize,
    /// Factor applied to `N` when an interval fails to contract.
    #[serde(default = "default_n_growth")]
    pub n_growth: usize,
    #[serde(default = "default_n_cap")]
    pub n_cap: usize,
    #[serde(default)]
    pub young: bool,
    /// Shortest interval tried by the Young solver before giving up.
    #[serde(default = "default_min_interval")]
    pub min_interval: f64,
    /// Young mode only: combine levels `L` and `L-1` as `2 u_L - u_{L-1}`.
    #[serde(default = "default_true")]
    pub extrapolate: bool,
}

impl SolverConfig {
    pub fn new(gamma: f64, kappa: f64, tolerance: f64) -> Self {
        Self {
            gamma,
            kappa,
            sewing_level: default_level(),
            tolerance,
            max_iterations: default_max_iterations(),
            n_start: default_n_start(),
            n_growth: default_n_growth(),
            n_cap: default_n_cap(),
            young: false,
            min_interval: default_min_interval(),
            extrapolate: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1.0 / 3.0 < self.kappa && self.kappa < self.gamma && self.gamma <= 1.0) {
            return invalid(format!("need 1/3 < κ < γ <= 1, got κ = {}, γ = {}", self.kappa, self.gamma));
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return invalid(format!("Picard tolerance must be positive, got {}", self.tolerance));
        }
        if self.max_iterations < 2 {
            return invalid("at least two Picard sweeps are needed to measure contraction");
        }
        if self.n_start == 0 || self.n_growth < 2 || self.n_cap < self.n_start {
            return invalid("need n_start >= 1, n_growth >= 2 and n_cap >= n_start");
        }
        if self.sewing_level > 20 {
            return invalid(format!("sewing level {} exceeds 20", self.sewing_level));
        }
        if !(self.min_interval > 0.0) {
            return invalid("min_interval must be positive");
        }
        Ok(())
    }

    /// Reporting exponents `(α₁, α₂)` with `α₂ = (γ-κ)/4`, `α₁ = 1 + α₂ - (γ+κ)/2`.
    pub fn alphas(&self) -> (f64, f64) {
        let a2 = (self.gamma - self.kappa) / 4.0;
        (1.0 + a2 - (self.gamma + self.kappa) / 2.0, a2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    Young,
    Rough,
}

/// Diagnostics of one converged interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalReport {
    pub start: f64,
    pub end: f64,
    /// `N` in force when the interval converged (rough mode).
    pub n_param: Option<usize>,
    pub iterations: usize,
    /// Ratio of the second to the first sweep distance.
    pub contraction: f64,
    /// Ratio of the last two sweep distances.
    pub final_contraction: f64,
    pub q_norm: f64,
    /// `(N+n)^{α₂}` (rough mode).
    pub ball_radius: Option<f64>,
}

impl IntervalReport {
    pub fn within_ball(&self) -> Option<bool> {
        self.ball_radius.map(|r| self.q_norm <= r)
    }
}

/// Where a solve starts and stops; both ends must be driver grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveWindow {
    pub start: f64,
    pub end: f64,
    /// `ỹ_{start}` laid out `[atom][d]`; zero when absent.
    pub initial: Option<Vec<f64>>,
}

/// Fine-mesh state of the level-`L` fixed point.
#[derive(Debug, Clone, PartialEq)]
struct FineState {
    first: usize,
    ytilde: Vec<f64>,
    y: Vec<f64>,
    zeta: Vec<f64>,
}

#[derive(Clone)]
pub struct Solution {
    path: LaplaceControlledPath,
    y: Vec<f64>,
    initial: Vec<f64>,
    intervals: Vec<IntervalReport>,
    final_n: Option<usize>,
    alphas: (f64, f64),
    mode: SolveMode,
    extrapolated: bool,
    fine: FineState,
    tables: Arc<Tables>,
    sigma: SigmaField,
}

impl std::fmt::Debug for Solution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Solution")
            .field("mode", &self.mode)
            .field("points", &self.path.grid().len())
            .field("intervals", &self.intervals.len())
            .field("final_n", &self.final_n)
            .finish()
    }
}

impl Solution {
    pub fn path(&self) -> &LaplaceControlledPath {
        &self.path
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        self.path.grid()
    }

    pub fn d(&self) -> usize {
        self.path.d()
    }

    /// `y_{t_i}`.
    pub fn y(&self, i: usize) -> &[f64] {
        let d = self.d();
        &self.y[i * d..(i + 1) * d]
    }

    /// All `y` values, laid out `[point][d]`.
    pub fn y_values(&self) -> &[f64] {
        &self.y
    }

    /// `ỹ_{t_i}(ξ_k)`.
    pub fn ytilde(&self, i: usize, k: usize) -> &[f64] {
        self.path.value(i, k)
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn intervals(&self) -> &[IntervalReport] {
        &self.intervals
    }

    /// Final `N` of the interval scheme (rough mode).
    pub fn final_n(&self) -> Option<usize> {
        self.final_n
    }

    pub fn alphas(&self) -> (f64, f64) {
        self.alphas
    }

    pub fn mode(&self) -> SolveMode {
        self.mode
    }

    /// Whether the exported path is a two-level extrapolation.
    pub fn extrapolated(&self) -> bool {
        self.extrapolated
    }

    /// Whether every interval's `Q̃^κ` norm stayed within its ball radius.
    pub fn window_respected(&self) -> Option<bool> {
        if self.mode == SolveMode::Young {
            return None;
        }
        Some(self.intervals.iter().all(|r| r.within_ball() == Some(true)))
    }

    /// Largest `Σ_k |w_k|(1+ξ_k^β) ‖δ̃ỹ_{ts}(ξ_k) - J_{ts}(d̃x σ(y))(ξ_k)‖` over
    /// consecutive grid pairs, measured on the level-`L` fixed point.
    pub fn picard_residual(&self) -> f64 {
        let tab = &*self.tables;
        let (n, d, na, m) = (tab.n, self.d(), tab.atoms(), tab.cells());
        let second = !tab.x2.is_empty();
        let fine = &self.fine;
        let mut z = vec![0.0; n * d];
        let mut dg = vec![0.0; n * d];
        let mut p = vec![0.0; if second { n * n * d } else { 0 }];
        let mut g = vec![0.0; d];
        let mut worst = 0.0f64;
        let cells = self.grid().cells();
        for c in 0..cells {
            let (j0, j1) = (fine.first + c * tab.stride, fine.first + (c + 1) * tab.stride);
            let mut j_acc = vec![0.0; na * d];
            for j in j0..j1 {
                let i = j - fine.first;
                let y = &fine.y[i * d..(i + 1) * d];
                let zeta = &fine.zeta[i * n * d..(i + 1) * n * d];
                node_terms(&self.sigma, y, zeta, second, &mut z, &mut dg, &mut p);
                for k in 0..na {
                    germ(tab, k, j, m, &z, &p, second, d, &mut g);
                    let dec = tab.decay[k * m + j];
                    for l in 0..d {
                        j_acc[k * d + l] = dec * j_acc[k * d + l] + g[l];
                    }
                }
            }
            let dt = tab.times[j1] - tab.times[j0];
            let (i0, i1) = (j0 - fine.first, j1 - fine.first);
            let mut total = 0.0;
            for k in 0..na {
                let e = (-tab.xi[k] * dt).exp();
                let r: Vec<f64> = (0..d)
                    .map(|l| {
                        fine.ytilde[(i1 * na + k) * d + l] - e * fine.ytilde[(i0 * na + k) * d + l] - j_acc[k * d + l]
                    })
                    .collect();
                total += tab.lbeta[k] * euclid(&r);
            }
            worst = worst.max(total);
        }
        worst
    }

    /// `t, y_1..y_d`, plus `ytilde_k_j` (atom `k`, component `j`, both from 1) when requested.
    pub fn table(&self, with_atoms: bool) -> Table {
        let (d, na) = (self.d(), self.path.measure().len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|j| format!("y_{j}")));
        if with_atoms {
            for k in 1..=na {
                header.extend((1..=d).map(|j| format!("ytilde_{k}_{j}")));
            }
        }
        let mut table = Table::new(header);
        for (i, &t) in self.grid().points().iter().enumerate() {
            let mut row = vec![t];
            row.extend_from_slice(self.y(i));
            if with_atoms {
                row.extend_from_slice(self.path.values_at(i));
            }
            table.push_numbers(row);
        }
        table
    }

    /// One row per solver interval.
    pub fn diagnostics_table(&self) -> Table {
        let mut table = Table::new([
            "interval",
            "t_start",
            "t_end",
            "n_param",
            "iterations",
            "contraction",
            "final_contraction",
            "q_norm",
            "ball_radius",
            "within_ball",
        ]);
        let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
        for (i, r) in self.intervals.iter().enumerate() {
            table.push(vec![
                i.to_string(),
                format_f64(r.start),
                format_f64(r.end),
                r.n_param.map(|n| n.to_string()).unwrap_or_default(),
                r.iterations.to_string(),
                format_f64(r.contraction),
                format_f64(r.final_contraction),
                format_f64(r.q_norm),
                opt(r.ball_radius),
                r.within_ball().map(|b| b.to_string()).unwrap_or_default(),
            ]);
        }
        table
    }
}

/// `z = σ(y)` and, for second-order germs, `P_{abl} = ∂_l σ_{al}(y) ζ_{bl}`.
#[inline]
fn node_terms(sigma: &SigmaField, y: &[f64], zeta: &[f64], second: bool, z: &mut [f64], dg: &mut [f64], p: &mut [f64]) {
    sigma.eval_into(y, z);
    if second {
        let (n, d) = (sigma.n(), sigma.d());
        sigma.diag_derivative_into(y, dg);
        for a in 0..n {
            for b in 0..n {
                for l in 0..d {
                    p[(a * n + b) * d + l] = dg[a * d + l] * zeta[b * d + l];
                }
            }
        }
    }
}

/// `x̃¹_j z + x̃²_j·ζ^{z*}` for atom `k` on sub-cell `j`.
#[inline]
#[allow(clippy::too_many_arguments)]
fn germ(tab: &Tables, k: usize, j: usize, m: usize, z: &[f64], p: &[f64], second: bool, d: usize, out: &mut [f64]) {
    let n = tab.n;
    let x1 = &tab.x1[(k * m + j) * n..(k * m + j + 1) * n];
    for (l, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for a in 0..n {
            acc += x1[a] * z[a * d + l];
        }
        *o = acc;
    }
    if second {
        let x2 = &tab.x2[(k * m + j) * n * n..(k * m + j + 1) * n * n];
        for (l, o) in out.iter_mut().enumerate() {
            let mut acc = *o;
            for ab in 0..n * n {
                acc += x2[ab] * p[ab * d + l];
            }
            *o = acc;
        }
    }
}

fn project_into(tab: &Tables, a: &[f64], yt: &[f64], out: &mut [f64]) {
    let d = a.len();
    out.copy_from_slice(a);
    for (k, w) in tab.w.iter().enumerate() {
        for l in 0..d {
            out[l] += w * yt[k * d + l];
        }
    }
}

/// Converged state of one interval, node-major over its `m + 1` nodes.
struct IntervalState {
    ytilde: Vec<f64>,
    y: Vec<f64>,
    zeta: Vec<f64>,
    iterations: usize,
    contraction: f64,
    final_contraction: f64,
}

struct Engine<'a> {
    tab: &'a Tables,
    sigma: &'a SigmaField,
    a: &'a [f64],
    cfg: &'a SolverConfig,
    second: bool,
    /// Hölder exponent of the sweep distance.
    exponent: f64,
}

impl Engine<'_> {
    fn sample(&self, j0: usize, j1: usize) -> Vec<usize> {
        let m = j1 - j0;
        if m < SAMPLE_NODES {
            return (j0..=j1).collect();
        }
        let mut idx: Vec<usize> = (0..SAMPLE_NODES).map(|i| j0 + i * m / (SAMPLE_NODES - 1)).collect();
        idx.dedup();
        idx
    }

    /// Runs Picard sweeps on nodes `j0..=j1` from `ỹ_{j0} = start`.
    fn picard(&self, j0: usize, j1: usize, start: &[f64]) -> std::result::Result<IntervalState, Vec<f64>> {
        let tab = self.tab;
        let (n, d, na, mm) = (tab.n, self.a.len(), tab.atoms(), tab.cells());
        let m = j1 - j0;
        let nodes = m + 1;
        let nd = n * d;
        // Atom-major ỹ so that sweeps split over atoms.
        let mut yt = vec![0.0; na * nodes * d];
        for k in 0..na {
            for i in 0..nodes {
                let e = (-tab.xi[k] * (tab.times[j0 + i] - tab.times[j0])).exp();
                for l in 0..d {
                    yt[(k * nodes + i) * d + l] = e * start[k * d + l];
                }
            }
        }
        let mut y = vec![0.0; nodes * d];
        let mut row = vec![0.0; na * d];
        let refresh_y = |yt: &[f64], y: &mut [f64], row: &mut [f64]| {
            for i in 0..nodes {
                for k in 0..na {
                    row[k * d..(k + 1) * d].copy_from_slice(&yt[(k * nodes + i) * d..(k * nodes + i + 1) * d]);
                }
                project_into(tab, self.a, row, &mut y[i * d..(i + 1) * d]);
            }
        };
        refresh_y(&yt, &mut y, &mut row);
        let z0 = self.sigma.eval(&y[0..d]);
        let mut zeta: Vec<f64> = (0..nodes).flat_map(|_| z0.iter().copied()).collect();

        let sample = self.sample(j0, j1);
        let mut sample_decay = vec![0.0; na * sample.len() * sample.len()];
        let ns = sample.len();
        for k in 0..na {
            for p in 0..ns {
                for q in p + 1..ns {
                    let dt = tab.times[sample[q]] - tab.times[sample[p]];
                    sample_decay[(k * ns + p) * ns + q] = (-tab.xi[k] * dt).exp();
                }
            }
        }

        let mut z = vec![0.0; nodes * nd];
        let mut pterm = vec![0.0; if self.second { m * n * nd } else { 0 }];
        let mut new_yt = vec![0.0; yt.len()];
        let mut new_y = vec![0.0; y.len()];
        let mut distances: Vec<f64> = Vec::new();
        for sweep in 1..=self.cfg.max_iterations {
            {
                let mut dg = vec![0.0; nd];
                for i in 0..nodes {
                    let pi: &mut [f64] = if self.second && i < m { &mut pterm[i * n * nd..(i + 1) * n * nd] } else { &mut [] };
                    node_terms(
                        self.sigma,
                        &y[i * d..(i + 1) * d],
                        &zeta[i * nd..(i + 1) * nd],
                        self.second && i < m,
                        &mut z[i * nd..(i + 1) * nd],
                        &mut dg,
                        pi,
                    );
                }
            }
            let advance = |k: usize, buf: &mut [f64]| {
                let mut g = vec![0.0; d];
                buf[0..d].copy_from_slice(&start[k * d..(k + 1) * d]);
                for i in 0..m {
                    let j = j0 + i;
                    let p: &[f64] = if self.second { &pterm[i * n * nd..(i + 1) * n * nd] } else { &[] };
                    germ(tab, k, j, mm, &z[i * nd..(i + 1) * nd], p, self.second, d, &mut g);
                    let dec = tab.decay[k * mm + j];
                    for l in 0..d {
                        buf[(i + 1) * d + l] = dec * buf[i * d + l] + g[l];
                    }
                }
            };
            if na >= PARALLEL_ATOMS {
                new_yt.par_chunks_mut(nodes * d).enumerate().for_each(|(k, buf)| advance(k, buf));
            } else {
                new_yt.chunks_mut(nodes * d).enumerate().for_each(|(k, buf)| advance(k, buf));
            }
            refresh_y(&new_yt, &mut new_y, &mut row);

            // Distance between the iterate and its image; the image's ζ is z.
            let mut sup_y = 0.0f64;
            let mut diff = vec![0.0; d];
            for i in 0..nodes {
                let mut s = 0.0;
                for k in 0..na {
                    for l in 0..d {
                        let at = (k * nodes + i) * d + l;
                        diff[l] = new_yt[at] - yt[at];
                    }
                    s += tab.lbeta[k] * euclid(&diff);
                }
                sup_y = sup_y.max(s);
            }
            let mut sup_z = 0.0f64;
            let mut dz = vec![0.0; nd];
            for i in 0..nodes {
                for e in 0..nd {
                    dz[e] = z[i * nd + e] - zeta[i * nd + e];
                }
                sup_z = sup_z.max(euclid(&dz));
            }
            let mut hol = 0.0f64;
            for p in 0..ns {
                for q in p + 1..ns {
                    let (ip, iq) = (sample[p] - j0, sample[q] - j0);
                    let dt = tab.times[sample[q]] - tab.times[sample[p]];
                    let mut s = 0.0;
                    for k in 0..na {
                        let e = sample_decay[(k * ns + p) * ns + q];
                        for l in 0..d {
                            let dq = new_yt[(k * nodes + iq) * d + l] - yt[(k * nodes + iq) * d + l];
                            let dp = new_yt[(k * nodes + ip) * d + l] - yt[(k * nodes + ip) * d + l];
                            diff[l] = dq - e * dp;
                        }
                        s += tab.lbeta[k] * euclid(&diff);
                    }
                    hol = hol.max(s / dt.powf(self.exponent));
                }
            }
            let dist = sup_y + sup_z + hol;
            std::mem::swap(&mut yt, &mut new_yt);
            std::mem::swap(&mut y, &mut new_y);
            zeta.copy_from_slice(&z);
            distances.push(dist);
            if !dist.is_finite() {
                return Err(distances);
            }
            let ratio = |a: usize, b: usize| if distances[a] > 0.0 { distances[b] / distances[a] } else { 0.0 };
            if sweep == 2 && ratio(0, 1) >= 1.0 && dist > self.cfg.tolerance {
                return Err(distances);
            }
            if dist <= self.cfg.tolerance {
                let contraction = if distances.len() >= 2 { ratio(0, 1) } else { 0.0 };
                let final_contraction = if distances.len() >= 2 { ratio(distances.len() - 2, distances.len() - 1) } else { 0.0 };
                // Back to node-major layout.
                let mut ytilde = vec![0.0; yt.len()];
                for k in 0..na {
                    for i in 0..nodes {
                        ytilde[(i * na + k) * d..(i * na + k + 1) * d]
                            .copy_from_slice(&yt[(k * nodes + i) * d..(k * nodes + i + 1) * d]);
                    }
                }
                return Ok(IntervalState { ytilde, y, zeta, iterations: sweep, contraction, final_contraction });
            }
        }
        Err(distances)
    }

    /// Discrete `Q̃^κ` norm of a converged interval on sampled nodes.
    fn q_norm(&self, j0: usize, j1: usize, st: &IntervalState) -> f64 {
        let tab = self.tab;
        let (n, d, na, mm) = (tab.n, self.a.len(), tab.atoms(), tab.cells());
        let kappa = self.cfg.kappa;
        let sample = self.sample(j0, j1);
        let yt = |i: usize, k: usize| &st.ytilde[((i - j0) * na + k) * d..((i - j0) * na + k + 1) * d];
        let zeta = |i: usize| &st.zeta[(i - j0) * n * d..(i - j0 + 1) * n * d];
        let lnorm = |f: &dyn Fn(usize) -> Vec<f64>| (0..na).map(|k| tab.lbeta[k] * euclid(&f(k))).sum::<f64>();
        let mut sup_y = 0.0f64;
        let mut sup_z = 0.0f64;
        for &i in &sample {
            sup_y = sup_y.max(lnorm(&|k| yt(i, k).to_vec()));
            sup_z = sup_z.max(euclid(zeta(i)));
        }
        let (mut hol_y, mut hol_z, mut rem) = (0.0f64, 0.0f64, 0.0f64);
        let mut x1 = vec![0.0; na * n];
        for (pi, &p) in sample.iter().enumerate() {
            x1.iter_mut().for_each(|v| *v = 0.0);
            let mut j = p;
            for &q in &sample[pi + 1..] {
                while j < q {
                    for k in 0..na {
                        let dec = tab.decay[k * mm + j];
                        for a in 0..n {
                            x1[k * n + a] = dec * x1[k * n + a] + tab.x1[(k * mm + j) * n + a];
                        }
                    }
                    j += 1;
                }
                let dt = tab.times[q] - tab.times[p];
                let e: Vec<f64> = tab.xi.iter().map(|xi| (-xi * dt).exp()).collect();
                let dy = |k: usize| -> Vec<f64> { (0..d).map(|l| yt(q, k)[l] - e[k] * yt(p, k)[l]).collect() };
                hol_y = hol_y.max(lnorm(&dy) / dt.powf(kappa));
                let dz: Vec<f64> = zeta(q).iter().zip(zeta(p)).map(|(a, b)| a - b).collect();
                hol_z = hol_z.max(euclid(&dz) / dt.powf(kappa));
                let r = |k: usize| -> Vec<f64> {
                    let dyk = dy(k);
                    (0..d).map(|l| dyk[l] - (0..n).map(|a| x1[k * n + a] * zeta(p)[a * d + l]).sum::<f64>()).collect()
                };
                rem = rem.max(lnorm(&r) / dt.powf(2.0 * kappa));
            }
        }
        sup_y + hol_y + sup_z + hol_z + rem
    }
}

fn snap(times: &[f64], from: usize, target: f64, last: usize) -> usize {
    let tol = 4.0 * f64::EPSILON * times[times.len() - 1].abs().max(1.0);
    let j = times.partition_point(|&t| t < target - tol);
    j.clamp(from + 1, last)
}

struct RunOutput {
    fine: FineState,
    intervals: Vec<IntervalReport>,
    final_n: Option<usize>,
}

#[allow(clippy::too_many_arguments)]
fn run(
    tab: &Tables,
    sigma: &SigmaField,
    a: &[f64],
    cfg: &SolverConfig,
    mode: SolveMode,
    first: usize,
    last: usize,
    start: &[f64],
) -> Result<RunOutput> {
    let (n, d, na) = (tab.n, a.len(), tab.atoms());
    let engine = Engine {
        tab,
        sigma,
        a,
        cfg,
        second: mode == SolveMode::Rough,
        exponent: if mode == SolveMode::Young { cfg.gamma } else { cfg.kappa },
    };
    let nodes = last - first + 1;
    let mut fine = FineState {
        first,
        ytilde: vec![0.0; nodes * na * d],
        y: vec![0.0; nodes * d],
        zeta: vec![0.0; nodes * n * d],
    };
    fine.ytilde[..na * d].copy_from_slice(start);
    project_into(tab, a, start, &mut fine.y[..d]);
    let z0 = sigma.eval(&fine.y[..d]);
    fine.zeta[..n * d].copy_from_slice(&z0);

    let (_, alpha2) = cfg.alphas();
    let mut intervals = Vec::new();
    let mut big_n = cfg.n_start;
    let mut length = tab.times[last] - tab.times[first];
    let mut j0 = first;
    let mut trace: Vec<String> = Vec::new();
    while j0 < last {
        let target = match mode {
            SolveMode::Rough => tab.times[j0] + 1.0 / (big_n + intervals.len()) as f64,
            SolveMode::Young => tab.times[j0] + length,
        };
        let j1 = snap(&tab.times, j0, target, last);
        let init = fine.ytilde[(j0 - first) * na * d..(j0 - first + 1) * na * d].to_vec();
        match engine.picard(j0, j1, &init) {
            Ok(st) => {
                let q_norm = engine.q_norm(j0, j1, &st);
                let ball_radius = (mode == SolveMode::Rough).then(|| ((big_n + intervals.len()) as f64).powf(alpha2));
                trace.push(format!("[{:.6}, {:.6}] q = {:.3e}", tab.times[j0], tab.times[j1], q_norm));
                intervals.push(IntervalReport {
                    start: tab.times[j0],
                    end: tab.times[j1],
                    n_param: (mode == SolveMode::Rough).then_some(big_n),
                    iterations: st.iterations,
                    contraction: st.contraction,
                    final_contraction: st.final_contraction,
                    q_norm,
                    ball_radius,
                });
                let off = j0 - first;
                fine.ytilde[off * na * d..(off + j1 - j0 + 1) * na * d].copy_from_slice(&st.ytilde);
                fine.y[off * d..(off + j1 - j0 + 1) * d].copy_from_slice(&st.y);
                fine.zeta[off * n * d..(off + j1 - j0 + 1) * n * d].copy_from_slice(&st.zeta);
                j0 = j1;
            }
            Err(distances) => {
                let shown: Vec<String> = distances.iter().take(4).map(|v| format!("{v:.3e}")).collect();
                trace.push(format!(
                    "[{:.6}, {:.6}] no contraction, sweep distances {}",
                    tab.times[j0],
                    tab.times[j1],
                    shown.join(", ")
                ));
                match mode {
                    SolveMode::Rough => {
                        big_n = big_n.saturating_mul(cfg.n_growth);
                        if big_n > cfg.n_cap {
                            return Err(Error::Solver(format!(
                                "N exceeded its cap {} without contraction; trace: {}",
                                cfg.n_cap,
                                trace.join("; ")
                            )));
                        }
                    }
                    SolveMode::Young => {
                        length *= 0.5;
                        if j1 == j0 + 1 || length < cfg.min_interval {
                            return Err(Error::Solver(format!(
                                "no contraction down to the interval floor; trace: {}",
                                trace.join("; ")
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(RunOutput { fine, intervals, final_n: (mode == SolveMode::Rough).then_some(big_n) })
}

fn check_inputs(sigma: &SigmaField, n: usize, a: &[f64], cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    if sigma.n() != n {
        return shape(format!("σ has {} rows but the driver has {n} components", sigma.n()));
    }
    if a.len() != sigma.d() {
        return shape(format!("initial value has {} entries, σ expects d = {}", a.len(), sigma.d()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return invalid("initial value must be finite");
    }
    Ok(())
}

fn window_nodes(grid: &TimeGrid, stride: usize, window: &SolveWindow) -> Result<(usize, usize)> {
    let locate = |t: f64| match grid.locate(t) {
        Some(i) => Ok(i),
        None => invalid(format!("window end {t} is not a driver grid point")),
    };
    let (i0, i1) = (locate(window.start)?, locate(window.end)?);
    if i0 >= i1 {
        return invalid(format!("empty solve window [{}, {}]", window.start, window.end));
    }
    Ok((i0 * stride, i1 * stride))
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    driver: &DriverPath,
    measure: Arc<KernelMeasure>,
    sigma: &SigmaField,
    a: &[f64],
    cfg: &SolverConfig,
    mode: SolveMode,
    window: &SolveWindow,
    build: impl Fn(u32) -> Result<Tables>,
) -> Result<Solution> {
    let (n, d, na) = (driver.dims(), a.len(), measure.len());
    let start = match &window.initial {
        Some(v) if v.len() != na * d => return shape(format!("initial ỹ needs {} entries, got {}", na * d, v.len())),
        Some(v) => v.clone(),
        None => vec![0.0; na * d],
    };
    let tab = Arc::new(build(cfg.sewing_level)?);
    let (first, last) = window_nodes(driver.grid(), tab.stride, window)?;
    let out = run(&tab, sigma, a, cfg, mode, first, last, &start)?;
    let (i0, i1) = (first / tab.stride, last / tab.stride);
    let grid = Arc::new(TimeGrid::segment(driver.grid().points()[i0..=i1].to_vec())?);
    let coarse = |fine: &FineState, stride: usize| {
        let mut yt = Vec::with_capacity(grid.len() * na * d);
        let mut zeta = Vec::with_capacity(grid.len() * n * d);
        for i in 0..grid.len() {
            let f = i * stride;
            yt.extend_from_slice(&fine.ytilde[f * na * d..(f + 1) * na * d]);
            zeta.extend_from_slice(&fine.zeta[f * n * d..(f + 1) * n * d]);
        }
        (yt, zeta)
    };
    let (mut yt, mut zeta) = coarse(&out.fine, tab.stride);
    let extrapolated = mode == SolveMode::Young && cfg.extrapolate && cfg.sewing_level >= 1;
    if extrapolated {
        let coarse_cfg = SolverConfig { sewing_level: cfg.sewing_level - 1, ..*cfg };
        let tab2 = build(coarse_cfg.sewing_level)?;
        let out2 = run(&tab2, sigma, a, &coarse_cfg, mode, i0 * tab2.stride, i1 * tab2.stride, &start)?;
        let (yt2, zeta2) = coarse(&out2.fine, tab2.stride);
        for (u, v) in yt.iter_mut().zip(&yt2) {
            *u = 2.0 * *u - v;
        }
        for (u, v) in zeta.iter_mut().zip(&zeta2) {
            *u = 2.0 * *u - v;
        }
    }
    let mut y = vec![0.0; grid.len() * d];
    for i in 0..grid.len() {
        project_into(&tab, a, &yt[i * na * d..(i + 1) * na * d], &mut y[i * d..(i + 1) * d]);
    }
    let path = LaplaceControlledPath::new(grid, measure, d, n, yt, zeta)?;
    Ok(Solution {
        path,
        y,
        initial: a.to_vec(),
        intervals: out.intervals,
        final_n: out.final_n,
        alphas: cfg.alphas(),
        mode,
        extrapolated,
        fine: out.fine,
        tables: tab,
        sigma: sigma.clone(),
    })
}

fn full_window(driver: &DriverPath) -> SolveWindow {
    let g = driver.grid();
    SolveWindow { start: g.time(0), end: g.horizon(), initial: None }
}

/// Young Volterra solve on a window of the driver grid.
pub fn solve_young_window(
    lift: &RoughLift,
    sigma: &SigmaField,
    a: &[f64],
    config: &SolverConfig,
    window: &SolveWindow,
) -> Result<Solution> {
    check_inputs(sigma, lift.dims(), a, config)?;
    if !lift.hypotheses().first_order || lift.gamma() <= 0.5 {
        return invalid(format!("Young solve needs a first-order lift with γ > 1/2 (γ = {})", lift.gamma()));
    }
    let driver = lift.driver();
    let measure = lift.measure().clone();
    let beta = config.gamma;
    assemble(driver, measure.clone(), sigma, a, config, SolveMode::Young, window, |level| {
        laplace_tables(driver, &measure, level, beta, false)
    })
}

/// `y_t = a + ∫_0^t φ(t-u) dx_u σ(y_u)` for a driver of regularity `γ > 1/2`.
pub fn solve_young(lift: &RoughLift, sigma: &SigmaField, a: &[f64], config: &SolverConfig) -> Result<Solution> {
    solve_young_window(lift, sigma, a, config, &full_window(lift.driver()))
}

/// Rough Volterra solve on a window of the driver grid.
pub fn solve_rough_window(
    lift: &RoughLift,
    sigma: &SigmaField,
    a: &[f64],
    config: &SolverConfig,
    window: &SolveWindow,
) -> Result<Solution> {
    check_inputs(sigma, lift.dims(), a, config)?;
    if !lift.hypotheses().second_order {
        return invalid("rough solve needs a lift satisfying the second-order hypothesis");
    }
    let driver = lift.driver();
    let measure = lift.measure().clone();
    assemble(driver, measure.clone(), sigma, a, config, SolveMode::Rough, window, |level| {
        laplace_tables(driver, &measure, level, 1.0, true)
    })
}

/// `y_t = a + ∫_0^t φ(t-u) dx_u σ(y_u)` for a driver of regularity `γ > 1/3`.
pub fn solve_rough(lift: &RoughLift, sigma: &SigmaField, a: &[f64], config: &SolverConfig) -> Result<Solution> {
    solve_rough_window(lift, sigma, a, config, &full_window(lift.driver()))
}

/// Classical rough ODE `dy = dx σ(y)` built from increments and Lévy areas.
///
/// Uses the same interval scheme as [`solve_rough`]; the result carries a
/// single atom `(0, 1)`.
pub fn solve_rough_diffusion(
    driver: &DriverPath,
    sigma: &SigmaField,
    a: &[f64],
    config: &SolverConfig,
) -> Result<Solution> {
    check_inputs(sigma, driver.dims(), a, config)?;
    let measure = Arc::new(KernelMeasure::point_mass(0.0, 1.0)?);
    assemble(driver, measure, sigma, a, config, SolveMode::Rough, &full_window(driver), |level| {
        classical_tables(driver, level, 1.0)
    })
}

/// Dispatches on [`SolverConfig::young`].
pub fn solve(lift: &RoughLift, sigma: &SigmaField, a: &[f64], config: &SolverConfig) -> Result<Solution> {
    if config.young {
        solve_young(lift, sigma, a, config)
    } else {
        solve_rough(lift, sigma, a, config)
    }
}
