use crate::error::{invalid, Result};

/// Strictly increasing sample times `0 = t_0 < t_1 < ... < t_N = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.first().is_some_and(|&p| p != 0.0) {
            return invalid(format!("a time grid must start at 0, got {}", points[0]));
        }
        Self::segment(points)
    }

    /// Strictly increasing times starting anywhere in `[0, ∞)`.
    pub fn segment(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return invalid(format!("a time grid needs at least 2 points, got {}", points.len()));
        }
        if !(points[0] >= 0.0) || !points[0].is_finite() {
            return invalid(format!("a time grid must start at a finite time >= 0, got {}", points[0]));
        }
        for (i, w) in points.windows(2).enumerate() {
            if !w[1].is_finite() || w[1] <= w[0] {
                return invalid(format!(
                    "time grid is not strictly increasing at index {}: {} -> {}",
                    i + 1,
                    w[0],
                    w[1]
                ));
            }
        }
        Ok(Self { points })
    }

    /// `cells + 1` equally spaced points on `[0, horizon]`.
    pub fn uniform(horizon: f64, cells: usize) -> Result<Self> {
        if cells == 0 || !(horizon > 0.0) || !horizon.is_finite() {
            return invalid(format!("uniform grid needs cells > 0 and a positive horizon, got {cells} cells on [0, {horizon}]"));
        }
        let h = horizon / cells as f64;
        let mut points: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
        points[cells] = horizon;
        Self::new(points)
    }

    /// Uniform grid with `2^level` cells.
    pub fn dyadic(horizon: f64, level: u32) -> Result<Self> {
        Self::uniform(horizon, 1usize << level)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cells(&self) -> usize {
        self.points.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn time(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// Index of `t` if it is (up to a few ulps of the horizon) a grid point.
    pub fn locate(&self, t: f64) -> Option<usize> {
        let tol = 4.0 * f64::EPSILON * self.horizon().max(1.0);
        let i = self.points.partition_point(|&p| p < t - tol);
        (i < self.points.len() && (self.points[i] - t).abs() <= tol).then_some(i)
    }

    /// Cell index `i` with `t_i <= t < t_{i+1}`; the final point maps to the last cell.
    pub fn cell_of(&self, t: f64) -> usize {
        let i = self.points.partition_point(|&p| p <= t);
        i.saturating_sub(1).min(self.cells() - 1)
    }

    /// Every `stride`-th point; the last point must be hit exactly.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 || self.cells() % stride != 0 {
            return invalid(format!("stride {stride} does not divide {} cells", self.cells()));
        }
        Self::new(self.points.iter().copied().step_by(stride).collect())
    }

    /// Split every cell into `factor` equal sub-cells.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return invalid("refinement factor must be positive");
        }
        let mut points = Vec::with_capacity(self.cells() * factor + 1);
        for w in self.points.windows(2) {
            let h = (w[1] - w[0]) / factor as f64;
            points.push(w[0]);
            for j in 1..factor {
                points.push(w[0] + j as f64 * h);
            }
        }
        points.push(self.horizon());
        Self::new(points)
    }

    /// Mean cell width.
    pub fn mean_step(&self) -> f64 {
        self.horizon() / self.cells() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(vec![0.0]).is_err());
        assert!(TimeGrid::new(vec![0.1, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::new(vec![0.0, 1.0, f64::NAN]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.25, 1.0]).is_ok());
    }

    #[test]
    fn locate_and_cells() {
        let g = TimeGrid::dyadic(1.0, 3).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.locate(0.375), Some(3));
        assert_eq!(g.locate(0.3), None);
        assert_eq!(g.cell_of(0.3), 2);
        assert_eq!(g.cell_of(1.0), 7);
        assert_eq!(g.cell_of(0.0), 0);
    }

    #[test]
    fn refine_then_subsample_round_trips() {
        let g = TimeGrid::new(vec![0.0, 0.2, 0.7, 1.0]).unwrap();
        let fine = g.refine(4).unwrap();
        assert_eq!(fine.cells(), 12);
        assert_eq!(fine.subsample(4).unwrap(), g);
    }
}
