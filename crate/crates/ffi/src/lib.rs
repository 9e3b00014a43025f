//! C ABI over the `rough-volterra` solver.
//!
//! Objects live behind opaque handles created by `rv_*_new`/`rv_*_from_*`
//! constructors and released with the matching `rv_*_free`. Every fallible
//! call returns an `RvStatus`; on failure a description is available from
//! `rv_last_error` on the same thread until the next failing call.
//!
//! Handles are immutable once built, so they may be shared between threads
//! as long as no thread frees one that another is still using.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use rough_volterra::algebra::TimeGrid;
use rough_volterra::laplace::KernelMeasure;
use rough_volterra::lift::{sample_brownian, sample_fbm, DriverKind, DriverPath, RoughLift};
use rough_volterra::solver::{solve, Profile, SigmaField, Solution, SolverConfig};
use rough_volterra::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    ShapeMismatch = 3,
    NotSewable = 4,
    Quadrature = 5,
    Cholesky = 6,
    UndefinedExponent = 7,
    Solver = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Scalar profile `f` in `σ_{al}(y) = offset_{al} + scale_{al} f(y_l)`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RvProfile {
    Zero = 0,
    Constant = 1,
    Linear = 2,
    Sin = 3,
    Tanh = 4,
}

impl From<RvProfile> for Profile {
    fn from(p: RvProfile) -> Self {
        match p {
            RvProfile::Zero => Profile::Zero,
            RvProfile::Constant => Profile::Constant,
            RvProfile::Linear => Profile::Linear,
            RvProfile::Sin => Profile::Sin,
            RvProfile::Tanh => Profile::Tanh,
        }
    }
}

/// Solver parameters. Start from `rv_solver_config_default` and adjust.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RvSolverConfig {
    pub gamma: f64,
    pub kappa: f64,
    pub tolerance: f64,
    pub sewing_level: u32,
    pub max_iterations: usize,
    pub n_start: usize,
    pub n_growth: usize,
    pub n_cap: usize,
    /// Run the Young solver instead of the rough one.
    pub young: bool,
    pub min_interval: f64,
    pub extrapolate: bool,
}

impl From<SolverConfig> for RvSolverConfig {
    fn from(c: SolverConfig) -> Self {
        Self {
            gamma: c.gamma,
            kappa: c.kappa,
            tolerance: c.tolerance,
            sewing_level: c.sewing_level,
            max_iterations: c.max_iterations,
            n_start: c.n_start,
            n_growth: c.n_growth,
            n_cap: c.n_cap,
            young: c.young,
            min_interval: c.min_interval,
            extrapolate: c.extrapolate,
        }
    }
}

impl From<RvSolverConfig> for SolverConfig {
    fn from(c: RvSolverConfig) -> Self {
        Self {
            gamma: c.gamma,
            kappa: c.kappa,
            tolerance: c.tolerance,
            sewing_level: c.sewing_level,
            max_iterations: c.max_iterations,
            n_start: c.n_start,
            n_growth: c.n_growth,
            n_cap: c.n_cap,
            young: c.young,
            min_interval: c.min_interval,
            extrapolate: c.extrapolate,
        }
    }
}

/// Discrete kernel measure `μ = Σ w_k δ_{ξ_k}`.
pub struct RvMeasure(Arc<KernelMeasure>);

/// Driver path sampled on a time grid.
pub struct RvDriver(Arc<DriverPath>);

/// Laplace rough lift of a driver against a measure.
pub struct RvLift(RoughLift);

/// Diffusion coefficient `σ: ℝ^d → ℝ^{n×d}`.
pub struct RvSigma(SigmaField);

/// Solution of a solve, indexed by the driver grid.
pub struct RvSolution(Solution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: RvStatus,
    message: String,
}

impl Failure {
    fn new(status: RvStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidInput(_) => RvStatus::InvalidInput,
            Error::ShapeMismatch(_) => RvStatus::ShapeMismatch,
            Error::NotSewable { .. } => RvStatus::NotSewable,
            Error::Quadrature { .. } => RvStatus::Quadrature,
            Error::Cholesky { .. } => RvStatus::Cholesky,
            Error::UndefinedExponent(_) => RvStatus::UndefinedExponent,
            Error::Solver(_) => RvStatus::Solver,
        };
        Self::new(status, e.to_string())
    }
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> RvStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => RvStatus::Ok,
        Ok(Err(f)) => {
            set_last_error(f.message);
            f.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            RvStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::new(RvStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, len: usize) -> Result<(), Failure> {
    if len < src.len() {
        return Err(Failure::new(
            RvStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    if src.is_empty() {
        return Ok(());
    }
    if dst.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the most recent failing call on this thread, or null.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rv_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds `Σ weights[k] δ_{xi[k]}` from `len` atoms.
///
/// # Safety
/// `xi` and `weights` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_measure_from_atoms(
    xi: *const f64,
    weights: *const f64,
    len: usize,
    out: *mut *mut RvMeasure,
) -> RvStatus {
    guard(|| {
        let xi = slice(xi, len, "xi")?;
        let w = slice(weights, len, "weights")?;
        let m = KernelMeasure::from_atoms(xi.iter().copied().zip(w.iter().copied()).collect())?;
        store(out, RvMeasure(Arc::new(m)))
    })
}

/// Number of atoms, or 0 for a null handle.
///
/// # Safety
/// `measure` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rv_measure_len(measure: *const RvMeasure) -> usize {
    measure.as_ref().map_or(0, |m| m.0.len())
}

/// # Safety
/// `measure` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rv_measure_free(measure: *mut RvMeasure) {
    free(measure)
}

/// Deterministic driver from `points` times and `points * dims` row-major values.
///
/// # Safety
/// `times` must hold `points` doubles, `values` `points * dims`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_driver_from_values(
    times: *const f64,
    points: usize,
    values: *const f64,
    dims: usize,
    out: *mut *mut RvDriver,
) -> RvStatus {
    guard(|| {
        let times = slice(times, points, "times")?;
        let count = points
            .checked_mul(dims)
            .ok_or_else(|| Failure::new(RvStatus::InvalidInput, "points * dims overflows"))?;
        let values = slice(values, count, "values")?;
        let grid = Arc::new(TimeGrid::new(times.to_vec())?);
        let d = DriverPath::new(grid, dims, values.to_vec(), DriverKind::Deterministic, None)?;
        store(out, RvDriver(Arc::new(d)))
    })
}

/// Fractional Brownian motion with `dims` independent components on a uniform grid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_driver_sample_fbm(
    hurst: f64,
    horizon: f64,
    cells: usize,
    dims: usize,
    seed: u64,
    out: *mut *mut RvDriver,
) -> RvStatus {
    guard(|| {
        let grid = Arc::new(TimeGrid::uniform(horizon, cells)?);
        store(out, RvDriver(Arc::new(sample_fbm(hurst, grid, dims, seed)?)))
    })
}

/// Standard Brownian motion with `dims` independent components on a uniform grid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_driver_sample_brownian(
    horizon: f64,
    cells: usize,
    dims: usize,
    seed: u64,
    out: *mut *mut RvDriver,
) -> RvStatus {
    guard(|| {
        let grid = Arc::new(TimeGrid::uniform(horizon, cells)?);
        store(out, RvDriver(Arc::new(sample_brownian(grid, dims, seed)?)))
    })
}

/// Number of grid points, or 0 for a null handle.
///
/// # Safety
/// `driver` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rv_driver_points(driver: *const RvDriver) -> usize {
    driver.as_ref().map_or(0, |d| d.0.grid().len())
}

/// # Safety
/// `driver` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rv_driver_dims(driver: *const RvDriver) -> usize {
    driver.as_ref().map_or(0, |d| d.0.dims())
}

/// Copies the `points * dims` driver samples into `buf`.
///
/// # Safety
/// `driver` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rv_driver_values(driver: *const RvDriver, buf: *mut f64, len: usize) -> RvStatus {
    guard(|| copy_out(handle(driver, "driver")?.0.values(), buf, len))
}

/// # Safety
/// `driver` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rv_driver_free(driver: *mut RvDriver) {
    free(driver)
}

/// Lifts `driver` against `measure` with Hölder exponent `gamma`.
///
/// The lift keeps its own references, so both inputs may be freed afterwards.
///
/// # Safety
/// `driver` and `measure` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_lift_new(
    driver: *const RvDriver,
    measure: *const RvMeasure,
    gamma: f64,
    out: *mut *mut RvLift,
) -> RvStatus {
    guard(|| {
        let d = handle(driver, "driver")?.0.clone();
        let m = handle(measure, "measure")?.0.clone();
        store(out, RvLift(RoughLift::new(d, m, gamma)?))
    })
}

/// First twisted level on `[s, t]` at atom `atom`: `dims` doubles.
///
/// # Safety
/// `lift` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rv_lift_x1_tilde(
    lift: *const RvLift,
    s: f64,
    t: f64,
    atom: usize,
    buf: *mut f64,
    len: usize,
) -> RvStatus {
    guard(|| {
        let lift = &handle(lift, "lift")?.0;
        check_atom(lift, atom)?;
        copy_out(&lift.x1_tilde(s, t, atom)?, buf, len)
    })
}

/// Second twisted level on `[s, t]` at atom `atom`: `dims * dims` row-major doubles.
///
/// # Safety
/// `lift` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rv_lift_x2_tilde(
    lift: *const RvLift,
    s: f64,
    t: f64,
    atom: usize,
    buf: *mut f64,
    len: usize,
) -> RvStatus {
    guard(|| {
        let lift = &handle(lift, "lift")?.0;
        check_atom(lift, atom)?;
        copy_out(&lift.x2_tilde(s, t, atom)?, buf, len)
    })
}

fn check_atom(lift: &RoughLift, atom: usize) -> Result<(), Failure> {
    let n = lift.measure().len();
    if atom >= n {
        return Err(Failure::new(RvStatus::InvalidInput, format!("atom {atom} out of range for {n} atoms")));
    }
    Ok(())
}

/// # Safety
/// `lift` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rv_lift_free(lift: *mut RvLift) {
    free(lift)
}

/// `σ_{al}(y) = offset_{al} + scale_{al} f(y_l)` with `n * d` row-major parameters.
///
/// # Safety
/// `scale` and `offset` must each hold `n * d` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_sigma_new(
    n: usize,
    d: usize,
    profile: RvProfile,
    scale: *const f64,
    offset: *const f64,
    out: *mut *mut RvSigma,
) -> RvStatus {
    guard(|| {
        let count = n
            .checked_mul(d)
            .ok_or_else(|| Failure::new(RvStatus::InvalidInput, "n * d overflows"))?;
        let scale = slice(scale, count, "scale")?;
        let offset = slice(offset, count, "offset")?;
        store(out, RvSigma(SigmaField::new(n, d, profile.into(), scale.to_vec(), offset.to_vec())?))
    })
}

/// # Safety
/// `sigma` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rv_sigma_free(sigma: *mut RvSigma) {
    free(sigma)
}

/// Rough-solver defaults for the given exponents and Picard tolerance.
#[no_mangle]
pub extern "C" fn rv_solver_config_default(gamma: f64, kappa: f64, tolerance: f64) -> RvSolverConfig {
    SolverConfig::new(gamma, kappa, tolerance).into()
}

/// Solves the Volterra equation driven by `lift` from initial value `a` of length `d`.
///
/// # Safety
/// `lift`, `sigma` and `config` must be live; `a` must hold `a_len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rv_solve(
    lift: *const RvLift,
    sigma: *const RvSigma,
    a: *const f64,
    a_len: usize,
    config: *const RvSolverConfig,
    out: *mut *mut RvSolution,
) -> RvStatus {
    guard(|| {
        let lift = &handle(lift, "lift")?.0;
        let sigma = &handle(sigma, "sigma")?.0;
        let config: SolverConfig = (*handle(config, "config")?).into();
        let a = slice(a, a_len, "initial value")?;
        store(out, RvSolution(solve(lift, sigma, a, &config)?))
    })
}

/// Number of grid points, or 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rv_solution_points(solution: *const RvSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.0.grid().len())
}

/// Dimension `d` of the solution, or 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rv_solution_dims(solution: *const RvSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.0.d())
}

/// Copies the grid times.
///
/// # Safety
/// `solution` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rv_solution_times(solution: *const RvSolution, buf: *mut f64, len: usize) -> RvStatus {
    guard(|| copy_out(handle(solution, "solution")?.0.grid().points(), buf, len))
}

/// Copies `y` as `points * dims` row-major doubles.
///
/// # Safety
/// `solution` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rv_solution_values(solution: *const RvSolution, buf: *mut f64, len: usize) -> RvStatus {
    guard(|| copy_out(handle(solution, "solution")?.0.y_values(), buf, len))
}

/// Number of patched solver intervals, or 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rv_solution_intervals(solution: *const RvSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.0.intervals().len())
}

/// Largest weighted defect of the fixed-point equation over consecutive grid pairs, NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rv_solution_picard_residual(solution: *const RvSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.0.picard_residual())
}

/// # Safety
/// `solution` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rv_solution_free(solution: *mut RvSolution) {
    free(solution)
}
