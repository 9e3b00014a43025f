#ifndef ROUGH_VOLTERRA_H
#define ROUGH_VOLTERRA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Scalar profile `f` in `σ_{al}(y) = offset_{al} + scale_{al} f(y_l)`.
typedef enum RvProfile {
  RV_PROFILE_ZERO = 0,
  RV_PROFILE_CONSTANT = 1,
  RV_PROFILE_LINEAR = 2,
  RV_PROFILE_SIN = 3,
  RV_PROFILE_TANH = 4,
} RvProfile;

// Result code of every fallible call.
typedef enum RvStatus {
  RV_STATUS_OK = 0,
  RV_STATUS_NULL_POINTER = 1,
  RV_STATUS_INVALID_INPUT = 2,
  RV_STATUS_SHAPE_MISMATCH = 3,
  RV_STATUS_NOT_SEWABLE = 4,
  RV_STATUS_QUADRATURE = 5,
  RV_STATUS_CHOLESKY = 6,
  RV_STATUS_UNDEFINED_EXPONENT = 7,
  RV_STATUS_SOLVER = 8,
  RV_STATUS_BUFFER_TOO_SMALL = 9,
  RV_STATUS_PANIC = 10,
} RvStatus;

// Driver path sampled on a time grid.
typedef struct RvDriver RvDriver;

// Laplace rough lift of a driver against a measure.
typedef struct RvLift RvLift;

// Discrete kernel measure `μ = Σ w_k δ_{ξ_k}`.
typedef struct RvMeasure RvMeasure;

// Diffusion coefficient `σ: ℝ^d → ℝ^{n×d}`.
typedef struct RvSigma RvSigma;

// Solution of a solve, indexed by the driver grid.
typedef struct RvSolution RvSolution;

// Solver parameters. Start from `rv_solver_config_default` and adjust.
typedef struct RvSolverConfig {
  double gamma;
  double kappa;
  double tolerance;
  uint32_t sewing_level;
  size_t max_iterations;
  size_t n_start;
  size_t n_growth;
  size_t n_cap;
  // Run the Young solver instead of the rough one.
  bool young;
  double min_interval;
  bool extrapolate;
} RvSolverConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *rv_version(void);

// Message of the most recent failing call on this thread, or null.
//
// The pointer stays valid until the next failing call on the same thread.
const char *rv_last_error(void);

// Builds `Σ weights[k] δ_{xi[k]}` from `len` atoms.
//
// # Safety
// `xi` and `weights` must point to `len` readable doubles; `out` must be writable.
enum RvStatus rv_measure_from_atoms(const double *xi,
                                    const double *weights,
                                    size_t len,
                                    struct RvMeasure **out);

// Number of atoms, or 0 for a null handle.
//
// # Safety
// `measure` must be null or a live handle.
size_t rv_measure_len(const struct RvMeasure *measure);

// # Safety
// `measure` must be null or a handle not yet freed.
void rv_measure_free(struct RvMeasure *measure);

// Deterministic driver from `points` times and `points * dims` row-major values.
//
// # Safety
// `times` must hold `points` doubles, `values` `points * dims`; `out` must be writable.
enum RvStatus rv_driver_from_values(const double *times,
                                    size_t points,
                                    const double *values,
                                    size_t dims,
                                    struct RvDriver **out);

// Fractional Brownian motion with `dims` independent components on a uniform grid.
//
// # Safety
// `out` must be writable.
enum RvStatus rv_driver_sample_fbm(double hurst,
                                   double horizon,
                                   size_t cells,
                                   size_t dims,
                                   uint64_t seed,
                                   struct RvDriver **out);

// Standard Brownian motion with `dims` independent components on a uniform grid.
//
// # Safety
// `out` must be writable.
enum RvStatus rv_driver_sample_brownian(double horizon,
                                        size_t cells,
                                        size_t dims,
                                        uint64_t seed,
                                        struct RvDriver **out);

// Number of grid points, or 0 for a null handle.
//
// # Safety
// `driver` must be null or a live handle.
size_t rv_driver_points(const struct RvDriver *driver);

// # Safety
// `driver` must be null or a live handle.
size_t rv_driver_dims(const struct RvDriver *driver);

// Copies the `points * dims` driver samples into `buf`.
//
// # Safety
// `driver` must be a live handle and `buf` must hold `len` doubles.
enum RvStatus rv_driver_values(const struct RvDriver *driver, double *buf, size_t len);

// # Safety
// `driver` must be null or a handle not yet freed.
void rv_driver_free(struct RvDriver *driver);

// Lifts `driver` against `measure` with Hölder exponent `gamma`.
//
// The lift keeps its own references, so both inputs may be freed afterwards.
//
// # Safety
// `driver` and `measure` must be live handles; `out` must be writable.
enum RvStatus rv_lift_new(const struct RvDriver *driver,
                          const struct RvMeasure *measure,
                          double gamma,
                          struct RvLift **out);

// First twisted level on `[s, t]` at atom `atom`: `dims` doubles.
//
// # Safety
// `lift` must be a live handle and `buf` must hold `len` doubles.
enum RvStatus rv_lift_x1_tilde(const struct RvLift *lift,
                               double s,
                               double t,
                               size_t atom,
                               double *buf,
                               size_t len);

// Second twisted level on `[s, t]` at atom `atom`: `dims * dims` row-major doubles.
//
// # Safety
// `lift` must be a live handle and `buf` must hold `len` doubles.
enum RvStatus rv_lift_x2_tilde(const struct RvLift *lift,
                               double s,
                               double t,
                               size_t atom,
                               double *buf,
                               size_t len);

// # Safety
// `lift` must be null or a handle not yet freed.
void rv_lift_free(struct RvLift *lift);

// `σ_{al}(y) = offset_{al} + scale_{al} f(y_l)` with `n * d` row-major parameters.
//
// # Safety
// `scale` and `offset` must each hold `n * d` doubles; `out` must be writable.
enum RvStatus rv_sigma_new(size_t n,
                           size_t d,
                           enum RvProfile profile,
                           const double *scale,
                           const double *offset,
                           struct RvSigma **out);

// # Safety
// `sigma` must be null or a handle not yet freed.
void rv_sigma_free(struct RvSigma *sigma);

// Rough-solver defaults for the given exponents and Picard tolerance.
struct RvSolverConfig rv_solver_config_default(double gamma, double kappa, double tolerance);

// Solves the Volterra equation driven by `lift` from initial value `a` of length `d`.
//
// # Safety
// `lift`, `sigma` and `config` must be live; `a` must hold `a_len` doubles; `out` must be writable.
enum RvStatus rv_solve(const struct RvLift *lift,
                       const struct RvSigma *sigma,
                       const double *a,
                       size_t a_len,
                       const struct RvSolverConfig *config,
                       struct RvSolution **out);

// Number of grid points, or 0 for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
size_t rv_solution_points(const struct RvSolution *solution);

// Dimension `d` of the solution, or 0 for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
size_t rv_solution_dims(const struct RvSolution *solution);

// Copies the grid times.
//
// # Safety
// `solution` must be a live handle and `buf` must hold `len` doubles.
enum RvStatus rv_solution_times(const struct RvSolution *solution, double *buf, size_t len);

// Copies `y` as `points * dims` row-major doubles.
//
// # Safety
// `solution` must be a live handle and `buf` must hold `len` doubles.
enum RvStatus rv_solution_values(const struct RvSolution *solution, double *buf, size_t len);

// Number of patched solver intervals, or 0 for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
size_t rv_solution_intervals(const struct RvSolution *solution);

// Largest weighted defect of the fixed-point equation over consecutive grid pairs, NaN for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
double rv_solution_picard_residual(const struct RvSolution *solution);

// # Safety
// `solution` must be null or a handle not yet freed.
void rv_solution_free(struct RvSolution *solution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROUGH_VOLTERRA_H */
