//! Exact Gaussian sampling of fractional Brownian motion on a time grid.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DriverKind, DriverPath};
use crate::algebra::TimeGrid;
use crate::error::{invalid, Error, Result};

/// Largest grid (in points) accepted by the dense Cholesky sampler.
pub const MAX_POINTS: usize = 1 << 12;

const JITTER_ATTEMPTS: usize = 6;

/// `E[(X_{t_{i+1}} - X_{t_i})(X_{t_{j+1}} - X_{t_j})]` for fBm of index `H`.
fn increment_cov(p: &[f64], i: usize, j: usize, two_h: f64) -> f64 {
    let f = |x: f64| x.abs().powf(two_h);
    0.5 * (f(p[i + 1] - p[j]) + f(p[i] - p[j + 1]) - f(p[i + 1] - p[j + 1]) - f(p[i] - p[j]))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// Lower-triangular Cholesky factor stored row by row (`n(n+1)/2` entries).
fn cholesky_packed(a: &[f64], n: usize) -> std::result::Result<Vec<f64>, usize> {
    let row = |i: usize| i * (i + 1) / 2;
    let mut l = vec![0.0; n * (n + 1) / 2];
    for i in 0..n {
        let ri = row(i);
        for j in 0..=i {
            let rj = row(j);
            let s = a[i * n + j] - dot(&l[ri..ri + j], &l[rj..rj + j]);
            if i == j {
                if !(s > 0.0) {
                    return Err(i);
                }
                l[ri + i] = s.sqrt();
            } else {
                l[ri + j] = s / l[rj + j];
            }
        }
    }
    Ok(l)
}

/// Cached Cholesky factor of the increment covariance for one `(H, grid)` pair.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    hurst: f64,
    grid: Arc<TimeGrid>,
    factor: Vec<f64>,
    jitter: f64,
}

impl FbmSampler {
    pub fn new(hurst: f64, grid: Arc<TimeGrid>) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return invalid(format!("Hurst index must lie in (0, 1), got {hurst}"));
        }
        if grid.len() > MAX_POINTS {
            return invalid(format!("fBm sampling is capped at {MAX_POINTS} points, got {}", grid.len()));
        }
        let n = grid.cells();
        let p = grid.points();
        let two_h = 2.0 * hurst;
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let c = increment_cov(p, i, j, two_h);
                cov[i * n + j] = c;
                cov[j * n + i] = c;
            }
        }
        let diag: Vec<f64> = (0..n).map(|i| cov[i * n + i]).collect();
        let scale = diag.iter().sum::<f64>() / n as f64;
        let mut jitter = 0.0;
        let mut pivot = 0;
        for attempt in 0..JITTER_ATTEMPTS {
            if attempt > 0 {
                jitter = scale * 1e-14 * 10f64.powi(attempt as i32);
                for (i, d) in diag.iter().enumerate() {
                    cov[i * n + i] = d + jitter;
                }
            }
            match cholesky_packed(&cov, n) {
                Ok(factor) => return Ok(Self { hurst, grid, factor, jitter }),
                Err(p) => pivot = p,
            }
        }
        Err(Error::Cholesky { pivot, attempts: JITTER_ATTEMPTS })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    /// Diagonal jitter that was needed for the factorisation (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// One `n_dims`-dimensional sample with independent components, started at 0.
    pub fn sample(&self, n_dims: usize, seed: u64) -> Result<DriverPath> {
        if n_dims == 0 {
            return invalid("a driver needs at least one dimension");
        }
        let n = self.grid.cells();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![0.0; (n + 1) * n_dims];
        let mut z = vec![0.0; n];
        for dim in 0..n_dims {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            let mut level = 0.0;
            for i in 0..n {
                let ri = i * (i + 1) / 2;
                level += dot(&self.factor[ri..=ri + i], &z[..=i]);
                values[(i + 1) * n_dims + dim] = level;
            }
        }
        let kind = if self.hurst == 0.5 { DriverKind::Brownian } else { DriverKind::Fbm { hurst: self.hurst } };
        DriverPath::new(self.grid.clone(), n_dims, values, kind, Some(seed))
    }
}

/// Exact fBm sample of index `hurst` on `grid` (see [`FbmSampler`] to reuse the factor).
pub fn sample_fbm(hurst: f64, grid: Arc<TimeGrid>, n_dims: usize, seed: u64) -> Result<DriverPath> {
    FbmSampler::new(hurst, grid)?.sample(n_dims, seed)
}

/// Brownian motion from independent `N(0, Δt)` increments; no size cap.
pub fn sample_brownian(grid: Arc<TimeGrid>, n_dims: usize, seed: u64) -> Result<DriverPath> {
    if n_dims == 0 {
        return invalid("a driver needs at least one dimension");
    }
    let n = grid.cells();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0; (n + 1) * n_dims];
    for dim in 0..n_dims {
        let mut level = 0.0;
        for i in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            level += z * (grid.time(i + 1) - grid.time(i)).sqrt();
            values[(i + 1) * n_dims + dim] = level;
        }
    }
    DriverPath::new(grid, n_dims, values, DriverKind::Brownian, Some(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reproduces_matrix() {
        let n = 5;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 1.0 / (1.0 + (i as f64 - j as f64).abs()) + if i == j { 1.0 } else { 0.0 };
            }
        }
        let l = cholesky_packed(&a, n).unwrap();
        let at = |i: usize, j: usize| if j <= i { l[i * (i + 1) / 2 + j] } else { 0.0 };
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| at(i, k) * at(j, k)).sum();
                assert!((s - a[i * n + j]).abs() < 1e-14);
            }
        }
        assert_eq!(cholesky_packed(&[1.0, 2.0, 2.0, 1.0], 2), Err(1));
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let g = Arc::new(TimeGrid::dyadic(1.0, 6).unwrap());
        let a = sample_fbm(0.7, g.clone(), 2, 9).unwrap();
        let b = sample_fbm(0.7, g.clone(), 2, 9).unwrap();
        assert_eq!(a.values(), b.values());
        let c = sample_fbm(0.7, g, 2, 10).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn half_is_brownian() {
        let g = Arc::new(TimeGrid::dyadic(1.0, 10).unwrap());
        let p = sample_fbm(0.5, g, 1, 3).unwrap();
        assert_eq!(p.kind(), DriverKind::Brownian);
        let inc: Vec<f64> = (0..p.grid().cells()).map(|i| p.value(i + 1)[0] - p.value(i)[0]).collect();
        let mean = inc.iter().sum::<f64>() / inc.len() as f64;
        let var = inc.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        let cov: f64 = inc.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        assert!((cov / var).abs() < 0.05, "lag-1 correlation {}", cov / var);
    }

    #[test]
    fn oversized_grid_is_rejected() {
        let g = Arc::new(TimeGrid::uniform(1.0, MAX_POINTS).unwrap());
        assert!(FbmSampler::new(0.4, g).is_err());
        let g = Arc::new(TimeGrid::uniform(1.0, 8).unwrap());
        assert!(FbmSampler::new(1.0, g).is_err());
    }
}
