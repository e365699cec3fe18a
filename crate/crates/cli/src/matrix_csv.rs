//! Plain numeric matrices as CSV: one row per `ix`, one column per `iy`.

use std::path::Path;

use arpam::Error;
use ndarray::Array2;

use crate::error::{CliError, CliResult};

/// Values are printed with the shortest representation that parses back to
/// the same `f64`.
pub fn encode(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Blank lines are skipped; every row must have the same number of finite
/// values.
pub fn decode(text: &str) -> arpam::Result<Array2<f64>> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut n = 0;
        for cell in line.split(',') {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line: i + 1, message: format!("bad number '{}'", cell.trim()) })?;
            if !v.is_finite() {
                return Err(Error::Parse { line: i + 1, message: "non-finite value".into() });
            }
            values.push(v);
            n += 1;
        }
        match cols {
            None => cols = Some(n),
            Some(c) if c != n => {
                return Err(Error::Parse { line: i + 1, message: format!("expected {c} columns, found {n}") })
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Format("empty matrix".into()))?;
    Ok(Array2::from_shape_vec((rows, cols), values).expect("rows are uniform"))
}

pub fn write(path: &Path, m: &Array2<f64>) -> CliResult<()> {
    std::fs::write(path, encode(m)).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> CliResult<Array2<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(decode(&text)?)
}
