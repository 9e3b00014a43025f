use super::increment::Increment1;
use super::norms::euclid;
use crate::error::{invalid, Error, Result};

/// Result of [`estimate_holder_exponent`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderEstimate {
    pub exponent: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

/// Empirical Hölder exponent of a sampled path.
///
/// For dyadic index lags `1, 2, 4, ...` (up to a sixteenth of the grid) the
/// median norm of the overlapping increments `x_{i+lag} - x_i` is regressed
/// against the mean time lag on a log-log scale; the slope is the estimate.
pub fn estimate_holder_exponent(path: &Increment1) -> Result<HolderEstimate> {
    let grid = path.grid();
    let n = grid.len();
    if n < 32 {
        return invalid(format!("exponent estimation needs at least 32 points, got {n}"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut lag = 1;
    while lag <= (n - 1) / 16 {
        let mut norms: Vec<f64> = (0..n - lag)
            .map(|i| {
                let d: Vec<f64> = path.value(i + lag).iter().zip(path.value(i)).map(|(a, b)| a - b).collect();
                euclid(&d)
            })
            .collect();
        norms.sort_by(f64::total_cmp);
        let median = if norms.len() % 2 == 1 {
            norms[norms.len() / 2]
        } else {
            0.5 * (norms[norms.len() / 2 - 1] + norms[norms.len() / 2])
        };
        if median <= 0.0 {
            return Err(Error::UndefinedExponent(format!("median increment vanishes at lag {lag}")));
        }
        let dt = (0..n - lag).map(|i| grid.time(i + lag) - grid.time(i)).sum::<f64>() / (n - lag) as f64;
        xs.push(dt.ln());
        ys.push(median.ln());
        lag *= 2;
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    Ok(HolderEstimate { exponent: slope, residual: (ss / m).sqrt() })
}
