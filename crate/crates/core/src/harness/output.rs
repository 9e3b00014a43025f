use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Decimal rendering with 17 significant digits, which round-trips every `f64`.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        // Keeps "-0" and "0" distinct while staying compact.
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    format!("{x:.16e}")
}

/// A rectangular table of pre-rendered cells with a fixed column order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    /// Appends a row of numbers rendered with [`format_f64`].
    pub fn push_numbers(&mut self, row: impl IntoIterator<Item = f64>) {
        self.rows.push(row.into_iter().map(format_f64).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write(&self, w: impl Write) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let err = |e: csv::Error| Error::InvalidInput(format!("CSV error: {e}"));
        out.write_record(&self.header).map_err(err)?;
        for row in &self.rows {
            if row.len() != self.header.len() {
                return Err(Error::ShapeMismatch(format!(
                    "row has {} cells, header has {}",
                    row.len(),
                    self.header.len()
                )));
            }
            out.write_record(row).map_err(err)?;
        }
        out.flush().map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

/// Writes `table` to `path`, creating or truncating the file.
pub fn emit_csv(table: &Table, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    table.write(&mut w)?;
    w.flush().map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for &x in &[0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0, -0.0, 1.0] {
            let s = format_f64(x);
            let y: f64 = s.parse().unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "{s}");
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(["t", "y_1"]);
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,y_1\n");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let mut t = Table::new(["a", "b"]);
        t.push_numbers([1.0]);
        assert!(t.write(Vec::new()).is_err());
    }
}
