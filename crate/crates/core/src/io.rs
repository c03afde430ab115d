//! File formats: distance matrices as header-less CSV, point sets as CSV
//! with an `x1,...,xd` header, facility opening costs as one decimal per
//! line. Floats are written with Rust's shortest round-trip formatting.

use crate::error::{Error, Result};
use std::path::Path;

fn parse_f64(tok: &str, path: &Path, line: usize) -> Result<f64> {
    tok.trim().parse::<f64>().map_err(|_| Error::Parse {
        path: path.display().to_string(),
        line,
        msg: format!("not a number: {tok:?}"),
    })
}

/// Reads an n×n distance matrix from header-less CSV.
pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>> = line
            .split(',')
            .map(|tok| parse_f64(tok, path, idx + 1))
            .collect();
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("matrix file has no rows"));
    }
    let n = rows.len();
    for (idx, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("expected {n} columns, found {}", row.len()),
            });
        }
    }
    Ok(rows)
}

/// Reads a point set from CSV with header `x1,x2,...,xd`.
pub fn read_points_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(Error::EmptyInput("points file is empty"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let d = cols.len();
    for (i, col) in cols.iter().enumerate() {
        if *col != format!("x{}", i + 1) {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: 1,
                msg: format!("expected header column x{}, found {col:?}", i + 1),
            });
        }
    }
    let mut points = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>> = line
            .split(',')
            .map(|tok| parse_f64(tok, path, idx + 1))
            .collect();
        let row = row?;
        if row.len() != d {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("expected {d} coordinates, found {}", row.len()),
            });
        }
        points.push(row);
    }
    if points.is_empty() {
        return Err(Error::EmptyInput("points file has no rows"));
    }
    Ok(points)
}

/// Reads facility opening costs, one decimal per line; line i is f(point i).
pub fn read_facility_costs(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut costs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        costs.push(parse_f64(line, path, idx + 1)?);
    }
    if costs.is_empty() {
        return Err(Error::EmptyInput("facility costs file has no rows"));
    }
    Ok(costs)
}

/// Renders a matrix as header-less CSV (shortest round-trip floats, trailing
/// newline).
pub fn matrix_to_csv(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    std::fs::write(path, matrix_to_csv(rows))?;
    Ok(())
}
