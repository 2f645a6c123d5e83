//! Rectangular tables and their CSV form.
//!
//! Floats are written with 17 significant digits so they parse back to the
//! identical double; complex cells are written as `re+imj`.

use std::path::Path;

use zeno_core::C64;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Complex(C64),
    Text(String),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Complex(z) => format!("{}{}j", format_float(z.re), signed(z.im)),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<C64> for Cell {
    fn from(v: C64) -> Self {
        Cell::Complex(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn signed(v: f64) -> String {
    if v.is_finite() {
        format!("{v:+.16e}")
    } else if v.is_nan() {
        "+NaN".to_string()
    } else {
        format!("{v:+}")
    }
}

/// Parses a cell written by [`Cell::render`] for a float column.
pub fn parse_float(s: &str) -> Option<f64> {
    s.parse().ok()
}

/// Parses a complex cell `re±imj`.
pub fn parse_complex(s: &str) -> Option<C64> {
    let body = s.strip_suffix('j')?;
    // the imaginary sign is the last + or - not following an exponent marker
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'e')?;
    Some(C64::new(body[..split].parse().ok()?, body[split..].parse().ok()?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<Cell>) -> CliResult<()> {
        if row.len() != self.columns.len() {
            return Err(CliError::Table(format!("row has {} cells, table has {} columns", row.len(), self.columns.len())));
        }
        self.rows.push(row);
        Ok(())
    }
}

pub fn emit_csv(table: &Table, path: &Path) -> CliResult<()> {
    if table.columns.is_empty() || table.columns.iter().any(|c| c.is_empty()) {
        return Err(CliError::Table("every column needs a name".into()));
    }
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    let to_io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Table(format!("{other:?}")),
    };
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(to_io)?;
    writer.write_record(&table.columns).map_err(to_io)?;
    for row in &table.rows {
        writer.write_record(row.iter().map(Cell::render)).map_err(to_io)?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}
