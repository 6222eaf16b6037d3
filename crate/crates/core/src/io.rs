//! Numeric CSV input and number formatting.
//!
//! Matrices are stored one observation per row. Reader errors carry
//! `path:line:column`.

use std::path::Path;

use crate::design::DesignMatrix;
use crate::error::{Error, Result};

/// Shortest representation that parses back to `v` exactly.
pub fn format_lossless(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// `v` rounded to 15 significant digits, then printed in shortest form.
pub fn format_number(v: f64) -> String {
    if !v.is_finite() {
        return format_lossless(v);
    }
    let rounded: f64 = format!("{v:.14e}").parse().expect("float formatting round-trips");
    format_lossless(rounded)
}

fn cell_error(path: &Path, line: u64, col: usize, msg: impl std::fmt::Display) -> Error {
    Error::invalid(format!("{}:{line}:{col}: {msg}", path.display()))
}

fn parse_cell(path: &Path, line: u64, col: usize, cell: &str) -> Result<f64> {
    let t = cell.trim();
    let v: f64 = t
        .parse()
        .map_err(|_| cell_error(path, line, col, format!("not a number: {t:?}")))?;
    if !v.is_finite() {
        return Err(cell_error(path, line, col, format!("non-finite value {t:?}")));
    }
    Ok(v)
}

/// Rows of numbers; every row must have the same width.
fn read_rows(path: &Path, header: bool) -> Result<(Option<Vec<String>>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    let names = if header {
        Some(rdr.headers()?.iter().map(|h| h.trim().to_string()).collect())
    } else {
        None
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, c)| parse_cell(path, line, j + 1, c))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(cell_error(
                    path,
                    line,
                    row.len().min(first.len()) + 1,
                    format!("row has {} columns, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::invalid(format!("{}: no data rows", path.display())));
    }
    Ok((names, rows))
}

/// Reads an `n × p` matrix.
pub fn read_matrix_csv(path: &Path, header: bool) -> Result<DesignMatrix<f64>> {
    let (_, rows) = read_rows(path, header)?;
    DesignMatrix::from_rows(&rows)
}

/// Reads a vector stored as a single column (or a single row).
pub fn read_vector_csv(path: &Path, header: bool) -> Result<Vec<f64>> {
    let (_, rows) = read_rows(path, header)?;
    if rows[0].len() == 1 {
        Ok(rows.into_iter().map(|r| r[0]).collect())
    } else if rows.len() == 1 {
        Ok(rows.into_iter().next().unwrap_or_default())
    } else {
        Err(Error::invalid(format!(
            "{}: expected one column, found {}",
            path.display(),
            rows[0].len()
        )))
    }
}

/// Reads a truth file: header `sigma0_sq,beta_1,…,beta_p` and one data row.
pub fn read_truth_csv(path: &Path) -> Result<(f64, Vec<f64>)> {
    let (names, rows) = read_rows(path, true)?;
    let names = names.unwrap_or_default();
    if names.first().map(String::as_str) != Some("sigma0_sq") {
        return Err(cell_error(path, 1, 1, "first column must be `sigma0_sq`"));
    }
    if rows.len() != 1 {
        return Err(Error::invalid(format!(
            "{}: expected one data row, found {}",
            path.display(),
            rows.len()
        )));
    }
    let mut row = rows.into_iter().next().unwrap_or_default();
    if row.len() < 2 {
        return Err(cell_error(path, 2, 2, "no coefficients"));
    }
    let beta = row.split_off(1);
    Ok((row[0], beta))
}

/// Writes a matrix without header, entries in lossless form.
pub fn write_matrix_csv(path: &Path, z: &DesignMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for i in 0..z.nrows() {
        w.write_record((0..z.ncols()).map(|j| format_lossless(z.get(i, j))))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a single-column vector without header.
pub fn write_vector_csv(path: &Path, v: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for x in v {
        w.write_record([format_lossless(*x)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_truth_csv(path: &Path, sigma0_sq: f64, beta: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut head = vec!["sigma0_sq".to_string()];
    head.extend((1..=beta.len()).map(|k| format!("beta_{k}")));
    w.write_record(&head)?;
    w.write_record(std::iter::once(sigma0_sq).chain(beta.iter().copied()).map(format_lossless))?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, 123456.789, 0.0, -0.0, 1e-5, 9.99e15] {
            assert_eq!(format_lossless(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn fifteen_digits() {
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333333");
        assert_eq!(format_number(2.0), "2");
        assert_eq!(format_number(0.1 + 0.2), "0.3");
        assert_eq!(format_number(f64::NAN), "NaN");
    }

    #[test]
    fn reader_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.csv");
        std::fs::write(&p, "a,b\n1,2\n3,x\n").unwrap();
        let err = read_matrix_csv(&p, true).unwrap_err().to_string();
        assert!(err.contains("z.csv:3:2"), "{err}");
        let z = read_matrix_csv(&p, false);
        assert!(z.is_err());
    }

    #[test]
    fn truth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_truth_csv(&p, 0.5, &[0.1, -0.2, 1.0 / 3.0]).unwrap();
        let (s, b) = read_truth_csv(&p).unwrap();
        assert_eq!(s, 0.5);
        assert_eq!(b, vec![0.1, -0.2, 1.0 / 3.0]);
    }

    #[test]
    fn ragged_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_matrix_csv(&p, false).is_err());
    }
}
