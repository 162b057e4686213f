//! Plain-text matrix and vector files.
//!
//! Two input formats are accepted: a header format whose first line is the
//! dimension `N` followed by `N` lines of `N` whitespace-separated values,
//! and headerless CSV. Writers always emit the header format with 17
//! significant digits so round-trips are bit-exact.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Vector};

fn parse_row(line: &str, sep_comma: bool) -> Result<Vec<f64>> {
    let items: Vec<&str> = if sep_comma {
        line.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
    } else {
        line.split_whitespace().collect()
    };
    items
        .iter()
        .map(|tok| tok.parse::<f64>().map_err(|e| Error::Parse(format!("bad number {tok:?}: {e}"))))
        .collect()
}

/// Read a matrix from the header format or headerless CSV.
pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path)?;
    parse_matrix(&text)
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if lines.is_empty() {
        return Err(Error::Parse("empty matrix file".into()));
    }
    let rows: Vec<Vec<f64>> = if lines[0].contains(',') {
        lines.iter().map(|l| parse_row(l, true)).collect::<Result<_>>()?
    } else {
        let first = parse_row(lines[0], false)?;
        if first.len() == 1 && first[0].fract() == 0.0 && first[0] >= 1.0 {
            let n = first[0] as usize;
            if lines.len() < n + 1 {
                return Err(Error::Parse(format!("expected {n} rows, found {}", lines.len() - 1)));
            }
            lines[1..=n].iter().map(|l| parse_row(l, false)).collect::<Result<_>>()?
        } else {
            return Err(Error::Parse(
                "first line must be the dimension N (or use CSV rows)".into(),
            ));
        }
    };
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(Error::Parse("ragged rows in matrix file".into()));
    }
    let cols = rows[0].len();
    Ok(Matrix::from_fn(n, cols, |i, j| rows[i][j]))
}

/// Read a vector: a 1xN or Nx1 matrix in either format, or one bare line.
pub fn read_vector(path: &Path) -> Result<Vector> {
    let text = fs::read_to_string(path)?;
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if lines.is_empty() {
        return Err(Error::Parse("empty vector file".into()));
    }
    if lines.len() == 1 {
        let row = parse_row(lines[0], lines[0].contains(','))?;
        return Ok(Vector::from_vec(row));
    }
    let m = parse_matrix(&text)?;
    if m.ncols() == 1 {
        Ok(m.column(0).clone_owned())
    } else if m.nrows() == 1 {
        Ok(m.row(0).transpose())
    } else {
        Err(Error::Parse(format!("expected a vector, got {}x{}", m.nrows(), m.ncols())))
    }
}

/// Format a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn matrix_to_string(m: &Matrix) -> String {
    let mut out = String::new();
    out.push_str(&format!("{}\n", m.nrows()));
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    fs::write(path, matrix_to_string(m))?;
    Ok(())
}
