//! Canonical CSV output: header row, comma separators, '.' decimal point,
//! floats in shortest round-trip form. Identical rows produce identical
//! bytes, which is what the determinism checks compare.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// One CSV cell; floats print in Rust's shortest round-trip form.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    UInt(u64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) => format!("{v}"),
            Cell::Text(s) => {
                debug_assert!(!s.contains(',') && !s.contains('\n'));
                s.clone()
            }
        }
    }
}

pub fn to_csv_string(header: &[&str], rows: &[Vec<Cell>]) -> Result<String> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Config(format!(
                "row width {} does not match header width {}",
                row.len(),
                header.len()
            )));
        }
        let mut first = true;
        for cell in row {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{}", cell.render());
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    let body = to_csv_string(header, rows)?;
    std::fs::write(path, body)?;
    Ok(())
}

/// Strict loader: the header must match the expected schema exactly
/// (unknown or missing columns are rejected), and every row must have the
/// full width.
pub fn read_csv(path: &Path, expected_header: &[&str]) -> Result<Vec<Vec<String>>> {
    let body = std::fs::read_to_string(path)?;
    parse_csv(&body, expected_header)
}

pub fn parse_csv(body: &str, expected_header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut lines = body.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty csv".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols != expected_header {
        return Err(Error::Config(format!(
            "schema mismatch: got [{}], expected [{}]",
            cols.join(" "),
            expected_header.join(" ")
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<String> = line.split(',').map(str::to_string).collect();
        if cells.len() != expected_header.len() {
            return Err(Error::Config(format!("short row at line {}", i + 2)));
        }
        rows.push(cells);
    }
    Ok(rows)
}
