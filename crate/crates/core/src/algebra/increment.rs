//! Discrete k-increments on a [`TimeGrid`].
//!
//! Arguments are grid indices in increasing time order: a 2-increment is
//! read at `(s, t)` with `s <= t` and stands for `g_{ts}`; a 3-increment is
//! read at `(s, u, t)` and stands for `h_{tus}`. Values are flattened
//! row-major matrices described by a [`Shape`] (vectors are `rows x 1`).
//!
//! 1-increments are stored densely. 2-increments keep their consecutive
//! pairs in a table and evaluate other pairs lazily through a memo cache;
//! 3-increments are never tabulated.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::grid::TimeGrid;
use crate::error::{shape, Result};
use crate::laplace::KernelMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub const fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    pub const fn vector(len: usize) -> Self {
        Self { rows: len, cols: 1 }
    }

    pub const fn scalar() -> Self {
        Self { rows: 1, cols: 1 }
    }

    pub const fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Shape of the matrix product `self * rhs`.
    pub fn product(&self, rhs: &Shape) -> Result<Shape> {
        if self.cols != rhs.rows {
            return shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            ));
        }
        Ok(Shape::new(self.rows, rhs.cols))
    }
}

/// Row-major matrix product of flattened values.
pub fn matmul(a: &[f64], sa: Shape, b: &[f64], sb: Shape) -> Vec<f64> {
    debug_assert_eq!(sa.cols, sb.rows);
    let mut out = vec![0.0; sa.rows * sb.cols];
    for i in 0..sa.rows {
        for k in 0..sa.cols {
            let aik = a[i * sa.cols + k];
            for j in 0..sb.cols {
                out[i * sb.cols + j] += aik * b[k * sb.cols + j];
            }
        }
    }
    out
}

fn sub_assign(acc: &mut [f64], rhs: &[f64]) {
    for (a, b) in acc.iter_mut().zip(rhs) {
        *a -= b;
    }
}

fn check_grid(a: &TimeGrid, b: &TimeGrid) -> Result<()> {
    if a != b {
        return shape("increments live on different time grids");
    }
    Ok(())
}

type Pair = dyn Fn(usize, usize) -> Vec<f64> + Send + Sync;
type Triple = dyn Fn(usize, usize, usize) -> Vec<f64> + Send + Sync;
type LaplacePair = dyn Fn(usize, usize, usize) -> Vec<f64> + Send + Sync;
type LaplaceTriple = dyn Fn(usize, usize, usize, usize) -> Vec<f64> + Send + Sync;
type DoublePair = dyn Fn(usize, usize, usize, usize) -> Vec<f64> + Send + Sync;
type DoubleTriple = dyn Fn(usize, usize, usize, usize, usize) -> Vec<f64> + Send + Sync;

/// A path `g_t` sampled on the grid.
#[derive(Debug, Clone)]
pub struct Increment1 {
    grid: Arc<TimeGrid>,
    shape: Shape,
    values: Vec<f64>,
}

impl Increment1 {
    pub fn new(grid: Arc<TimeGrid>, shape: Shape, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() * shape.len() {
            return self::shape(format!(
                "expected {} values for {} points of shape {:?}, got {}",
                grid.len() * shape.len(),
                grid.len(),
                shape,
                values.len()
            ));
        }
        Ok(Self { grid, shape, values })
    }

    pub fn from_fn(grid: Arc<TimeGrid>, shape: Shape, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len() * shape.len());
        for &t in grid.points() {
            let v = f(t);
            if v.len() != shape.len() {
                return self::shape(format!("closure returned {} values, shape needs {}", v.len(), shape.len()));
            }
            values.extend(v);
        }
        Ok(Self { grid, shape, values })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn value(&self, i: usize) -> &[f64] {
        let d = self.shape.len();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(δg)_{ts} = g_t - g_s`.
    pub fn delta(&self) -> Increment2 {
        let g = self.clone();
        Increment2::from_fn(self.grid.clone(), self.shape, move |s, t| {
            let mut v = g.value(t).to_vec();
            sub_assign(&mut v, g.value(s));
            v
        })
    }

    /// Pointwise product `(gh)_t = g_t h_t`.
    pub fn mul(&self, h: &Increment1) -> Result<Increment1> {
        check_grid(&self.grid, &h.grid)?;
        let out = self.shape.product(&h.shape)?;
        let mut values = Vec::with_capacity(self.grid.len() * out.len());
        for i in 0..self.grid.len() {
            values.extend(matmul(self.value(i), self.shape, h.value(i), h.shape));
        }
        Increment1::new(self.grid.clone(), out, values)
    }

    /// `(gh)_{ts} = g_t h_{ts}`.
    pub fn mul_pair(&self, h: &Increment2) -> Result<Increment2> {
        check_grid(&self.grid, &h.grid)?;
        let out = self.shape.product(&h.shape)?;
        let (g, h2, sg, sh) = (self.clone(), h.clone(), self.shape, h.shape);
        Ok(Increment2::from_fn(self.grid.clone(), out, move |s, t| {
            matmul(g.value(t), sg, &h2.value(s, t), sh)
        }))
    }
}

struct PairStore {
    consecutive: Vec<f64>,
    cache: Mutex<HashMap<(usize, usize), Vec<f64>>>,
}

/// A lazily evaluated 2-increment `g_{ts}`.
#[derive(Clone)]
pub struct Increment2 {
    grid: Arc<TimeGrid>,
    shape: Shape,
    eval: Arc<Pair>,
    store: Arc<PairStore>,
}

impl std::fmt::Debug for Increment2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Increment2").field("points", &self.grid.len()).field("shape", &self.shape).finish()
    }
}

impl Increment2 {
    pub fn from_fn(
        grid: Arc<TimeGrid>,
        shape: Shape,
        f: impl Fn(usize, usize) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        let mut consecutive = Vec::with_capacity(grid.cells() * shape.len());
        for i in 0..grid.cells() {
            let v = f(i, i + 1);
            assert_eq!(v.len(), shape.len(), "pair closure returned the wrong number of values");
            consecutive.extend(v);
        }
        Self {
            grid,
            shape,
            eval: Arc::new(f),
            store: Arc::new(PairStore { consecutive, cache: Mutex::new(HashMap::new()) }),
        }
    }

    /// Convenience constructor from a function of the two times `(s, t)`.
    pub fn from_time_fn(
        grid: Arc<TimeGrid>,
        shape: Shape,
        f: impl Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        let g = grid.clone();
        Self::from_fn(grid, shape, move |s, t| f(g.time(s), g.time(t)))
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Value `g_{ts}` for grid indices `s <= t`; zero on the diagonal.
    pub fn value(&self, s: usize, t: usize) -> Vec<f64> {
        assert!(s <= t && t < self.grid.len(), "pair ({s}, {t}) out of order or range");
        let d = self.shape.len();
        if s == t {
            return vec![0.0; d];
        }
        if t == s + 1 {
            return self.store.consecutive[s * d..(s + 1) * d].to_vec();
        }
        if let Some(v) = self.store.cache.lock().unwrap().get(&(s, t)) {
            return v.clone();
        }
        let v = (self.eval)(s, t);
        self.store.cache.lock().unwrap().entry((s, t)).or_insert_with(|| v.clone());
        v
    }

    /// `(δh)_{tus} = h_{ts} - h_{tu} - h_{us}`.
    pub fn delta(&self) -> Increment3 {
        let h = self.clone();
        Increment3::from_fn(self.grid.clone(), self.shape, move |s, u, t| {
            let mut v = h.value(s, t);
            sub_assign(&mut v, &h.value(u, t));
            sub_assign(&mut v, &h.value(s, u));
            v
        })
    }

    /// `(hg)_{ts} = h_{ts} g_s`.
    pub fn mul_point(&self, g: &Increment1) -> Result<Increment2> {
        check_grid(&self.grid, &g.grid)?;
        let out = self.shape.product(&g.shape)?;
        let (h, g, sh, sg) = (self.clone(), g.clone(), self.shape, g.shape);
        Ok(Increment2::from_fn(self.grid.clone(), out, move |s, t| {
            matmul(&h.value(s, t), sh, g.value(s), sg)
        }))
    }
}

/// A lazily evaluated 3-increment `h_{tus}`.
#[derive(Clone)]
pub struct Increment3 {
    grid: Arc<TimeGrid>,
    shape: Shape,
    eval: Arc<Triple>,
}

impl std::fmt::Debug for Increment3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Increment3").field("points", &self.grid.len()).field("shape", &self.shape).finish()
    }
}

impl Increment3 {
    pub fn from_fn(
        grid: Arc<TimeGrid>,
        shape: Shape,
        f: impl Fn(usize, usize, usize) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { grid, shape, eval: Arc::new(f) }
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Value `h_{tus}` for `s <= u <= t`; zero when two consecutive arguments coincide.
    pub fn value(&self, s: usize, u: usize, t: usize) -> Vec<f64> {
        assert!(s <= u && u <= t && t < self.grid.len(), "triple ({s}, {u}, {t}) out of order or range");
        if s == u || u == t {
            return vec![0.0; self.shape.len()];
        }
        (self.eval)(s, u, t)
    }
}

/// Twist factor `a_{ts}(ξ) = e^{-ξ(t-s)} - 1`.
pub fn twist(xi: f64, s: f64, t: f64) -> Result<f64> {
    if !(xi >= 0.0) || !xi.is_finite() {
        return crate::error::invalid(format!("Laplace frequency must be finite and >= 0, got {xi}"));
    }
    if t < s {
        return crate::error::invalid(format!("twist needs s <= t, got s = {s}, t = {t}"));
    }
    Ok(twist_unchecked(xi, t - s))
}

#[inline]
pub(crate) fn twist_unchecked(xi: f64, dt: f64) -> f64 {
    (-xi * dt).exp_m1()
}

fn check_measure(a: &KernelMeasure, b: &KernelMeasure) -> Result<()> {
    if a != b {
        return shape("Laplace-indexed increments refer to different kernel measures");
    }
    Ok(())
}

/// A path `g̃_t(ξ_k)` indexed by the atoms of a kernel measure.
#[derive(Debug, Clone)]
pub struct LaplaceIncrement1 {
    grid: Arc<TimeGrid>,
    measure: Arc<KernelMeasure>,
    shape: Shape,
    values: Vec<f64>,
}

impl LaplaceIncrement1 {
    /// `values` are laid out as `[point][atom][entry]`.
    pub fn new(grid: Arc<TimeGrid>, measure: Arc<KernelMeasure>, shape: Shape, values: Vec<f64>) -> Result<Self> {
        let want = grid.len() * measure.len() * shape.len();
        if values.len() != want {
            return self::shape(format!("expected {want} values, got {}", values.len()));
        }
        Ok(Self { grid, measure, shape, values })
    }

    pub fn from_fn(
        grid: Arc<TimeGrid>,
        measure: Arc<KernelMeasure>,
        shape: Shape,
        f: impl Fn(f64, f64) -> Vec<f64>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len() * measure.len() * shape.len());
        for &t in grid.points() {
            for &(xi, _) in measure.atoms() {
                let v = f(t, xi);
                if v.len() != shape.len() {
                    return self::shape("closure returned the wrong number of values");
                }
                values.extend(v);
            }
        }
        Ok(Self { grid, measure, shape, values })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn measure(&self) -> &Arc<KernelMeasure> {
        &self.measure
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn value(&self, i: usize, k: usize) -> &[f64] {
        let d = self.shape.len();
        let off = (i * self.measure.len() + k) * d;
        &self.values[off..off + d]
    }

    /// `(δ̃g̃)_{ts}(ξ) = g̃_t(ξ) - g̃_s(ξ) - a_{ts}(ξ) g̃_s(ξ)`.
    pub fn delta_tilde(&self) -> LaplaceIncrement2 {
        let g = self.clone();
        LaplaceIncrement2::from_fn(self.grid.clone(), self.measure.clone(), self.shape, move |s, t, k| {
            let xi = g.measure.atoms()[k].0;
            let a = twist_unchecked(xi, g.grid.time(t) - g.grid.time(s));
            let gs = g.value(s, k);
            let mut v = g.value(t, k).to_vec();
            for (o, x) in v.iter_mut().zip(gs) {
                *o -= x + a * x;
            }
            v
        })
    }

    /// Plain `δ` applied atom by atom.
    pub fn delta(&self) -> LaplaceIncrement2 {
        let g = self.clone();
        LaplaceIncrement2::from_fn(self.grid.clone(), self.measure.clone(), self.shape, move |s, t, k| {
            let mut v = g.value(t, k).to_vec();
            sub_assign(&mut v, g.value(s, k));
            v
        })
    }
}

/// A lazily evaluated `g̃_{ts}(ξ_k)`.
#[derive(Clone)]
pub struct LaplaceIncrement2 {
    grid: Arc<TimeGrid>,
    measure: Arc<KernelMeasure>,
    shape: Shape,
    eval: Arc<LaplacePair>,
    cache: Arc<Mutex<HashMap<(usize, usize, usize), Vec<f64>>>>,
}

impl std::fmt::Debug for LaplaceIncrement2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LaplaceIncrement2")
            .field("points", &self.grid.len())
            .field("atoms", &self.measure.len())
            .field("shape", &self.shape)
            .finish()
    }
}

impl LaplaceIncrement2 {
    pub fn from_fn(
        grid: Arc<TimeGrid>,
        measure: Arc<KernelMeasure>,
        shape: Shape,
        f: impl Fn(usize, usize, usize) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { grid, measure, shape, eval: Arc::new(f), cache: Arc::default() }
    }

    /// Build from a function of `(s, t, ξ)` in time units.
    pub fn from_time_fn(
        grid: Arc<TimeGrid>,
        measure: Arc<KernelMeasure>,
        shape: Shape,
        f: impl Fn(f64, f64, f64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        let (g, m) = (grid.clone(), measure.clone());
        Self::from_fn(grid, measure, shape, move |s, t, k| f(g.time(s), g.time(t), m.atoms()[k].0))
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn measure(&self) -> &Arc<KernelMeasure> {
        &self.measure
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn value(&self, s: usize, t: usize, k: usize) -> Vec<f64> {
        assert!(s <= t && t < self.grid.len(), "pair ({s}, {t}) out of order or range");
        assert!(k < self.measure.len(), "atom {k} out of range");
        if s == t {
            return vec![0.0; self.shape.len()];
        }
        if let Some(v) = self.cache.lock().unwrap().get(&(s, t, k)) {
            return v.clone();
        }
        let v = (self.eval)(s, t, k);
        self.cache.lock().unwrap().entry((s, t, k)).or_insert_with(|| v.clone());
        v
    }

    /// `(δ̃h̃)_{tus} = h̃_{ts} - h̃_{tu} - h̃_{us} - a_{tu} h̃_{us}`.
    pub fn delta_tilde(&self) -> LaplaceIncrement3 {
        let h = self.clone();
        LaplaceIncrement3::from_fn(self.grid.clone(), self.measure.clone(), self.shape, move |s, u, t, k| {
            let xi = h.measure.atoms()[k].0;
            let a = twist_unchecked(xi, h.grid.time(t) - h.grid.time(u));
            let hus = h.value(s, u, k);
            let mut v = h.value(s, t, k);
            sub_assign(&mut v, &h.value(u, t, k));
            for (o, x) in v.iter_mut().zip(&hus) {
                *o -= x + a * x;
            }
            v
        })
    }

    /// Plain `δ` applied atom by atom.
    pub fn delta(&self) -> LaplaceIncrement3 {
        let h = self.clone();
        LaplaceIncrement3::from_fn(self.grid.clone(), self.measure.clone(), self.shape, move |s, u, t, k| {
            let mut v = h.value(s, t, k);
            sub_assign(&mut v, &h.value(u, t, k));
            sub_assign(&mut v, &h.value(s, u, k));
            v
        })
    }

    /// `(M̃L)_{ts} = M̃_{ts} L_s`.
    pub fn mul_point(&self, l: &Increment1) -> Result<LaplaceIncrement2> {
        check_grid(&self.grid, &l.grid)?;
        let out = self.shape.product(&l.shape)?;
        let (m, l, sm, sl) = (self.clone(), l.clone(), self.shape, l.shape);
        Ok(LaplaceIncrement2::from_fn(self.grid.clone(), self.measure.clone(), out, move |s, t, k| {
            matmul(&m.value(s, t, k), sm, l.value(s), sl)
        }))
    }

    /// `(M̃L)_{tus} = M̃_{tu} L_{us}`.
    pub fn mul_pair(&self, l: &Increment2) -> Result<LaplaceIncrement3> {
        check_grid(&self.grid, &l.grid)?;
        let out = self.shape.product(&l.shape)?;
        let (m, l, sm, sl) = (self.clone(), l.clone(), self.shape, l.shape);
        Ok(LaplaceIncrement3::from_fn(self.grid.clone(), self.measure.clone(), out, move |s, u, t, k| {
            matmul(&m.value(u, t, k), sm, &l.value(s, u), sl)
        }))
    }

    /// Atom-wise difference, used to compare two constructions of the same object.
    pub fn sub(&self, other: &LaplaceIncrement2) -> Result<LaplaceIncrement2> {
        check_grid(&self.grid, &other.grid)?;
        check_measure(&self.measure, &other.measure)?;
        if self.shape != other.shape {
            return shape("cannot subtract increments of different shapes");
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(LaplaceIncrement2::from_fn(self.grid.clone(), self.measure.clone(), self.shape, move |s, t, k| {
            let mut v = a.value(s, t, k);
            sub_assign(&mut v, &b.value(s, t, k));
            v
        }))
    }
}

/// A lazily evaluated `h̃_{tus}(ξ_k)`.
#[derive(Clone)]
pub struct LaplaceIncrement3 {
    grid: Arc<TimeGrid>,
    measure: Arc<KernelMeasure>,
    shape: Shape,
    eval: Arc<LaplaceTriple>,
}

impl std::fmt::Debug for LaplaceIncrement3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LaplaceIncrement3")
            .field("points", &self.grid.len())
            .field("atoms", &self.measure.len())
            .field("shape", &self.shape)
            .finish()
    }
}

impl LaplaceIncrement3 {
    pub fn from_fn(
        grid: Arc<TimeGrid>,
        measure: Arc<KernelMeasure>,
        shape: Shape,
        f: impl Fn(usize, usize, usize, usize) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { grid, measure, shape, eval: Arc::new(f) }
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn measure(&self) -> &Arc<KernelMeasure> {
        &self.measure
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn value(&self, s: usize, u: usize, t: usize, k: usize) -> Vec<f64> {
        assert!(s <= u && u <= t && t < self.grid.len(), "triple ({s}, {u}, {t}) out of order or range");
        if s == u || u == t {
            return vec![0.0; self.shape.len()];
        }
        (self.eval)(s, u, t, k)
    }

    /// `(XL)_{tus} = X_{tus} L_s`.
    pub fn mul_point(&self, l: &Increment1) -> Result<LaplaceIncrement3> {
        check_grid(&self.grid, &l.grid)?;
        let out = self.shape.product(&l.shape)?;
        let (x, l, sx, sl) = (self.clone(), l.clone(), self.shape, l.shape);
        Ok(LaplaceIncrement3::from_fn(self.grid.clone(), self.measure.clone(), out, move |s, u, t, k| {
            matmul(&x.value(s, u, t, k), sx, l.value(s), sl)
        }))
    }
}

/// A 2-increment indexed by two atoms `(ξ_k, η_l)` from two measures.
#[derive(Clone)]
pub struct DoubleLaplaceIncrement2 {
    grid: Arc<TimeGrid>,
    xi: Arc<KernelMeasure>,
    eta: Arc<KernelMeasure>,
    shape: Shape,
    eval: Arc<DoublePair>,
}

impl std::fmt::Debug for DoubleLaplaceIncrement2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DoubleLaplaceIncrement2")
            .field("points", &self.grid.len())
            .field("xi_atoms", &self.xi.len())
            .field("eta_atoms", &self.eta.len())
            .finish()
    }
}

impl DoubleLaplaceIncrement2 {
    pub fn from_fn(
        grid: Arc<TimeGrid>,
        xi: Arc<KernelMeasure>,
        eta: Arc<KernelMeasure>,
        shape: Shape,
        f: impl Fn(usize, usize, usize, usize) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { grid, xi, eta, shape, eval: Arc::new(f) }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// `R̿_{ts}(ξ_k, η_l)`.
    pub fn value(&self, s: usize, t: usize, k: usize, l: usize) -> Vec<f64> {
        assert!(s <= t && t < self.grid.len(), "pair ({s}, {t}) out of order or range");
        if s == t {
            return vec![0.0; self.shape.len()];
        }
        (self.eval)(s, t, k, l)
    }

    /// `(δ̿R̿)_{tus}(ξ,η) = (δR̿)_{tus}(ξ,η) - a_{tu}(ξ) R̿_{us}(ξ,η) - R̿_{tu}(ξ,η) a_{us}(η)`.
    pub fn delta_double_tilde(&self) -> DoubleLaplaceIncrement3 {
        let r = self.clone();
        DoubleLaplaceIncrement3 {
            grid: self.grid.clone(),
            shape: self.shape,
            eval: Arc::new(move |s, u, t, k, l| {
                let (ts, tu, tt) = (r.grid.time(s), r.grid.time(u), r.grid.time(t));
                let a_tu = twist_unchecked(r.xi.atoms()[k].0, tt - tu);
                let a_us = twist_unchecked(r.eta.atoms()[l].0, tu - ts);
                let r_us = r.value(s, u, k, l);
                let r_tu = r.value(u, t, k, l);
                let mut v = r.value(s, t, k, l);
                for i in 0..v.len() {
                    v[i] -= r_tu[i] + r_us[i] + a_tu * r_us[i] + r_tu[i] * a_us;
                }
                v
            }),
        }
    }
}

/// Output of [`DoubleLaplaceIncrement2::delta_double_tilde`].
#[derive(Clone)]
pub struct DoubleLaplaceIncrement3 {
    grid: Arc<TimeGrid>,
    shape: Shape,
    eval: Arc<DoubleTriple>,
}

impl DoubleLaplaceIncrement3 {
    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn value(&self, s: usize, u: usize, t: usize, k: usize, l: usize) -> Vec<f64> {
        assert!(s <= u && u <= t && t < self.grid.len(), "triple ({s}, {u}, {t}) out of order or range");
        if s == u || u == t {
            return vec![0.0; self.shape.len()];
        }
        (self.eval)(s, u, t, k, l)
    }
}

/// `A·B = Tr(A B*)`, i.e. the entrywise sum `Σ A_ij B_ij`.
pub fn trace_pair(a: &[f64], sa: Shape, b: &[f64], sb: Shape) -> Result<f64> {
    if sa != sb || a.len() != sa.len() || b.len() != sb.len() {
        return shape(format!("trace pairing needs equal shapes, got {sa:?} and {sb:?}"));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
}
