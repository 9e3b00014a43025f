use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{Increment1, Shape, TimeGrid};
use crate::error::{invalid, shape, Error, Result};
use crate::harness::format_f64;

/// How a driver was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DriverKind {
    Deterministic,
    Brownian,
    Fbm { hurst: f64 },
}

/// An `n`-dimensional path sampled on a grid and interpolated linearly between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverPath {
    grid: Arc<TimeGrid>,
    dims: usize,
    values: Vec<f64>,
    slopes: Vec<f64>,
    kind: DriverKind,
    seed: Option<u64>,
}

impl DriverPath {
    /// `values` are laid out point by point, `dims` entries each.
    pub fn new(grid: Arc<TimeGrid>, dims: usize, values: Vec<f64>, kind: DriverKind, seed: Option<u64>) -> Result<Self> {
        if dims == 0 {
            return invalid("a driver needs at least one dimension");
        }
        if values.len() != grid.len() * dims {
            return shape(format!("expected {} driver values, got {}", grid.len() * dims, values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("driver value {i} is not finite"));
        }
        let mut slopes = Vec::with_capacity(grid.cells() * dims);
        for c in 0..grid.cells() {
            let h = grid.time(c + 1) - grid.time(c);
            for j in 0..dims {
                slopes.push((values[(c + 1) * dims + j] - values[c * dims + j]) / h);
            }
        }
        Ok(Self { grid, dims, values, slopes, kind, seed })
    }

    /// Deterministic driver sampled from `f` at the grid points.
    pub fn from_fn(grid: Arc<TimeGrid>, dims: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len() * dims);
        for &t in grid.points() {
            let v = f(t);
            if v.len() != dims {
                return shape(format!("driver closure returned {} values, expected {dims}", v.len()));
            }
            values.extend(v);
        }
        Self::new(grid, dims, values, DriverKind::Deterministic, None)
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn kind(&self) -> DriverKind {
        self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    /// Slope of the linear interpolation on cell `c`.
    pub fn slope(&self, c: usize) -> &[f64] {
        &self.slopes[c * self.dims..(c + 1) * self.dims]
    }

    /// Linear interpolation at an arbitrary time in `[0, T]`.
    pub fn value_at(&self, t: f64) -> Vec<f64> {
        let c = self.grid.cell_of(t);
        let dt = t - self.grid.time(c);
        self.value(c).iter().zip(self.slope(c)).map(|(x, m)| x + m * dt).collect()
    }

    /// Calls `f(a, b, cell)` for each maximal sub-interval `[a, b]` of `[s, t]`
    /// inside a single grid cell, left to right.
    pub(crate) fn for_each_piece(&self, s: f64, t: f64, mut f: impl FnMut(f64, f64, usize)) {
        let cells = self.grid.cells();
        let mut c = self.grid.cell_of(s);
        let mut a = s;
        while a < t && c < cells {
            let b = self.grid.time(c + 1).min(t);
            if b > a {
                f(a, b, c);
            }
            a = b;
            c += 1;
        }
    }

    /// Every `stride`-th sample of the same path.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        let grid = Arc::new(self.grid.subsample(stride)?);
        let values = (0..grid.len()).flat_map(|i| self.value(i * stride).to_vec()).collect();
        Self::new(grid, self.dims, values, self.kind, self.seed)
    }

    /// The same piecewise-linear path resampled on a refined grid.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        let grid = Arc::new(self.grid.refine(factor)?);
        let mut values = Vec::with_capacity(grid.len() * self.dims);
        for i in 0..grid.len() {
            if i % factor == 0 {
                values.extend_from_slice(self.value(i / factor));
            } else {
                let c = i / factor;
                let dt = grid.time(i) - self.grid.time(c);
                values.extend(self.value(c).iter().zip(self.slope(c)).map(|(x, m)| x + m * dt));
            }
        }
        Self::new(grid, self.dims, values, self.kind, self.seed)
    }

    /// `α x`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.dims, self.values.iter().map(|v| alpha * v).collect(), self.kind, self.seed)
    }

    pub fn to_increment(&self) -> Increment1 {
        Increment1::new(self.grid.clone(), Shape::vector(self.dims), self.values.clone())
            .expect("driver values match the grid")
    }

    /// CSV with header `t,x1,...,xn` and 17 significant digits.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dims).map(|j| format!("x{j}")));
        out.write_record(&header).map_err(io_err)?;
        for i in 0..self.grid.len() {
            let mut row = vec![format_f64(self.grid.time(i))];
            row.extend(self.value(i).iter().map(|&v| format_f64(v)));
            out.write_record(&row).map_err(io_err)?;
        }
        out.flush().map_err(|e| Error::InvalidInput(e.to_string()))
    }

    /// Inverse of [`DriverPath::write_csv`]; kind and seed come from the caller's metadata.
    pub fn read_csv(r: impl Read, kind: DriverKind, seed: Option<u64>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers().map_err(io_err)?.clone();
        let dims = header.len().saturating_sub(1);
        let ok = header.get(0) == Some("t") && (1..=dims).all(|j| header.get(j) == Some(format!("x{j}").as_str()));
        if dims == 0 || !ok {
            return invalid(format!("driver CSV header must be t,x1,...,xn, got {:?}", header));
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(io_err)?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad number {s:?}: {e}")));
            times.push(parse(&rec[0])?);
            for j in 1..=dims {
                values.push(parse(&rec[j])?);
            }
        }
        Self::new(Arc::new(TimeGrid::new(times)?), dims, values, kind, seed)
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("CSV error: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let g = Arc::new(TimeGrid::new(vec![0.0, 0.1, 0.35, 1.0]).unwrap());
        let p = DriverPath::from_fn(g, 2, |t| vec![t.sin() / 3.0, -t * t * 1e-7]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x1,x2\n"));
        assert!(!text.contains('\r'));
        let q = DriverPath::read_csv(buf.as_slice(), DriverKind::Deterministic, None).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn refine_keeps_the_path() {
        let g = Arc::new(TimeGrid::new(vec![0.0, 0.5, 1.0]).unwrap());
        let p = DriverPath::new(g, 1, vec![0.0, 1.0, -1.0], DriverKind::Deterministic, None).unwrap();
        let r = p.refine(4).unwrap();
        assert_eq!(r.grid().cells(), 8);
        assert_eq!(r.subsample(4).unwrap(), p);
        assert!((r.value(6)[0] - 0.0).abs() < 1e-15);
        assert_eq!(p.value_at(0.25), vec![0.5]);
    }

    #[test]
    fn pieces_cover_the_interval() {
        let g = Arc::new(TimeGrid::uniform(1.0, 4).unwrap());
        let p = DriverPath::from_fn(g, 1, |t| vec![t]).unwrap();
        let mut seen = Vec::new();
        p.for_each_piece(0.1, 0.6, |a, b, c| seen.push((a, b, c)));
        assert_eq!(seen, vec![(0.1, 0.25, 0), (0.25, 0.5, 1), (0.5, 0.6, 2)]);
        seen.clear();
        p.for_each_piece(0.5, 0.5, |a, b, c| seen.push((a, b, c)));
        assert!(seen.is_empty());
    }

    #[test]
    fn rejects_bad_values() {
        let g = Arc::new(TimeGrid::uniform(1.0, 2).unwrap());
        assert!(DriverPath::new(g.clone(), 1, vec![0.0, f64::NAN, 1.0], DriverKind::Deterministic, None).is_err());
        assert!(DriverPath::new(g, 1, vec![0.0, 1.0], DriverKind::Deterministic, None).is_err());
    }
}
