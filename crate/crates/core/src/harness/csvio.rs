//! CSV emission: comma-separated, header row, floats at 17 significant
//! digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Render a float with 17 significant digits (round-trip exact for f64).
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvWriter {
    out: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> std::io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", header.join(","))?;
        Ok(Self {
            out,
            columns: header.len(),
        })
    }

    /// Write one row of floats (formatted at full precision).
    pub fn write_row(&mut self, values: &[f64]) -> std::io::Result<()> {
        assert_eq!(values.len(), self.columns, "row width mismatch");
        let row: Vec<String> = values.iter().map(|v| format_float(*v)).collect();
        writeln!(self.out, "{}", row.join(","))
    }

    /// Write a row with a leading string cell followed by floats.
    pub fn write_tagged_row(&mut self, tag: &str, values: &[f64]) -> std::io::Result<()> {
        assert_eq!(values.len() + 1, self.columns, "row width mismatch");
        let row: Vec<String> = values.iter().map(|v| format_float(*v)).collect();
        writeln!(self.out, "{tag},{}", row.join(","))
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

/// Minimal CSV reader for our own output (no quoting or escapes).
pub fn read_csv(path: &Path) -> std::io::Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .map(|h| h.split(',').map(str::to_string).collect::<Vec<_>>())
        .unwrap_or_default();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok((header, rows))
}
