//! Deterministic CSV emission: schema comment line, UTF-8, `.` decimal,
//! scientific notation with 17 significant digits.

use std::io::Write;

pub const SCHEMA_LINE: &str = "# schema=1";

/// Scientific notation with 17 significant digits; reproduces bytes exactly
/// for equal inputs.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvWriter<W: Write> {
    out: W,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W, columns: &[&str]) -> std::io::Result<Self> {
        writeln!(out, "{SCHEMA_LINE}")?;
        writeln!(out, "{}", columns.join(","))?;
        Ok(Self { out })
    }

    pub fn row(&mut self, cells: &[String]) -> std::io::Result<()> {
        writeln!(self.out, "{}", cells.join(","))
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

/// Strips characters that would break the one-row-per-record shape.
pub fn sanitize_cell(text: &str) -> String {
    text.replace(['\n', '\r'], " ").replace(',', ";")
}
