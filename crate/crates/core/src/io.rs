//! CSV ingestion and tidy CSV export.
//!
//! Input tables have a header row of part names, one sample per row, comma
//! separators and decimal points. An optional response column is split off
//! by name.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::coda::{BalanceBasis, CompositionMatrix};
use crate::error::{Error, Result};

fn parse_cell(raw: &str, row: usize, col: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| {
        Error::InvalidArgument(format!("row {row}, column '{col}': '{raw}' is not a number"))
    })
}

/// Reads a composition and, if `response_col` names a column, the response.
pub fn read_composition_csv(
    path: &Path,
    response_col: Option<&str>,
) -> Result<(CompositionMatrix, Option<DVector<f64>>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let response_idx = match response_col {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::InvalidArgument(format!("response column '{name}' not found in {}", path.display()))
        })?),
        None => None,
    };
    let part_idx: Vec<usize> = (0..headers.len()).filter(|&i| Some(i) != response_idx).collect();

    let mut values = Vec::new();
    let mut response = Vec::new();
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::DimensionMismatch {
                expected: headers.len(),
                got: record.len(),
            });
        }
        for &i in &part_idx {
            values.push(parse_cell(&record[i], r + 1, &headers[i])?);
        }
        if let Some(i) = response_idx {
            response.push(parse_cell(&record[i], r + 1, &headers[i])?);
        }
        rows += 1;
    }
    let names = part_idx.iter().map(|&i| headers[i].clone()).collect();
    let x = CompositionMatrix::new(DMatrix::from_row_slice(rows, part_idx.len(), &values), names)?;
    let y = response_idx.map(|_| DVector::from_vec(response));
    Ok((x, y))
}

/// Reads the first column of a headed CSV as a response vector.
pub fn read_response_csv(path: &Path) -> Result<DVector<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = reader
        .headers()?
        .get(0)
        .map(|h| h.trim().to_string())
        .ok_or(Error::EmptyInput)?;
    let mut out = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let cell = record.get(0).ok_or(Error::EmptyInput)?;
        out.push(parse_cell(cell, r + 1, &header)?);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(DVector::from_vec(out))
}

/// Shortest representation that parses back to the same f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_composition_csv(path: &Path, x: &CompositionMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(x.part_names())?;
    for row in x.values().row_iter() {
        w.write_record(row.iter().map(|&v| fmt_f64(v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_vector_csv(path: &Path, header: &str, v: &DVector<f64>) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "{header}")?;
    for &value in v.iter() {
        writeln!(out, "{}", fmt_f64(value))?;
    }
    out.flush()?;
    Ok(())
}

/// Parts as rows, balances as columns, with a second header row holding the
/// criterion value of each balance.
pub fn write_basis_coefficients(path: &Path, basis: &BalanceBasis, part_names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["part".to_string()];
    header.extend((1..=basis.len()).map(|k| format!("PB{k}")));
    w.write_record(&header)?;
    let mut crit = vec![basis.criterion().label().to_string()];
    crit.extend(basis.scores().iter().map(|&s| fmt_f64(s)));
    w.write_record(&crit)?;
    let coeffs = basis.coefficient_matrix();
    for (i, name) in part_names.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(coeffs.row(i).iter().map(|&v| fmt_f64(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_basis_signs(path: &Path, basis: &BalanceBasis, part_names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["part".to_string()];
    header.extend((1..=basis.len()).map(|k| format!("PB{k}")));
    w.write_record(&header)?;
    for (name, signs) in part_names.iter().zip(basis.sign_matrix()) {
        let mut row = vec![name.clone()];
        row.extend(signs.iter().map(|s| s.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
