//! Plain-text formats: dense matrices as CSV, edge lists, node coordinates.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::stochastic::{ConsensusMatrix, DEFAULT_TOL, FILE_SUPPORT_EPS};

/// Parses a dense matrix from comma-separated rows. Blank lines and lines
/// starting with `#` are ignored; fields may carry surrounding spaces.
pub fn parse_matrix_csv<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let mut row = Vec::with_capacity(record.len());
        for (k, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                column: k + 1,
                message: format!("cannot parse {field:?} as a number"),
            })?;
            row.push(value);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line,
                    column: row.len().min(first.len()) + 1,
                    message: format!("row has {} entries, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty);
    }
    let cols = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix_csv(File::open(path)?)
}

/// Reads and validates a consensus matrix. Entries at or below
/// `FILE_SUPPORT_EPS` are treated as structural zeros.
pub fn load_consensus(path: &Path) -> Result<ConsensusMatrix> {
    ConsensusMatrix::with_support_eps(read_matrix_csv(path)?, DEFAULT_TOL, FILE_SUPPORT_EPS)
}

/// Writes with shortest round-trip formatting.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_edge_list(path: &Path, edges: &[(usize, usize)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["u", "v"])?;
    for &(u, v) in edges {
        w.write_record([u.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_edge_list(path: &Path) -> Result<Vec<(usize, usize)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut edges = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize| -> Result<usize> {
            let raw = record.get(k).unwrap_or("");
            raw.parse().map_err(|_| Error::Parse {
                line,
                column: k + 1,
                message: format!("cannot parse {raw:?} as a node index"),
            })
        };
        edges.push((field(0)?, field(1)?));
    }
    Ok(edges)
}

pub fn write_coordinates(path: &Path, coordinates: &[Vec<f64>]) -> Result<()> {
    let d = coordinates.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["node".to_string()];
    header.extend((0..d).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    for (i, c) in coordinates.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(c.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
