//! CSV point ingestion.
//!
//! Comma-separated; the first row is a header if any of its fields fails to
//! parse as a number. Columns are selected by header name or zero-based index.

use std::path::Path;

use curvebump::SampleMatrix;

use crate::error::{CliError, CliResult};

pub fn read_points(path: &Path, columns: &[String]) -> CliResult<SampleMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::read(path, e))?;
    let mut records = Vec::new();
    for rec in reader.records() {
        records.push(rec.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?);
    }
    let header = match records.first() {
        Some(first) if first.iter().any(|f| f.parse::<f64>().is_err()) => Some(records.remove(0)),
        _ => None,
    };
    let width = header
        .as_ref()
        .or(records.first())
        .map(|r| r.len())
        .unwrap_or(0);
    let selected = select_columns(header.as_ref(), width, columns)?;

    let dim = selected.len();
    let mut data = Vec::with_capacity(records.len() * dim);
    for rec in &records {
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        for &c in &selected {
            let cell = rec.get(c).ok_or_else(|| {
                CliError::Data(format!(
                    "line {line}: expected at least {} fields, found {}",
                    c + 1,
                    rec.len()
                ))
            })?;
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Data(format!("line {line}, column {}: cannot parse `{cell}` as a number", c + 1))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!(
                    "line {line}, column {}: non-finite value `{cell}`",
                    c + 1
                )));
            }
            data.push(v);
        }
    }
    if records.len() < 2 {
        return Err(CliError::Data(format!(
            "degenerate input: {} has {} data row(s); at least 2 are needed",
            path.display(),
            records.len()
        )));
    }
    Ok(SampleMatrix::new(dim, data)?)
}

fn select_columns(header: Option<&csv::StringRecord>, width: usize, columns: &[String]) -> CliResult<Vec<usize>> {
    let selected: Vec<usize> = if columns.is_empty() {
        (0..width).collect()
    } else {
        columns
            .iter()
            .map(|name| {
                if let Some(i) = header.and_then(|h| h.iter().position(|f| f == name)) {
                    return Ok(i);
                }
                match name.parse::<usize>() {
                    Ok(i) if i < width => Ok(i),
                    Ok(i) => Err(CliError::Usage(format!("column index {i} out of range ({width} columns)"))),
                    Err(_) => Err(CliError::Usage(format!("no column named `{name}`"))),
                }
            })
            .collect::<CliResult<_>>()?
    };
    if width == 0 {
        return Err(CliError::Data("degenerate input: no rows".into()));
    }
    if !(1..=3).contains(&selected.len()) {
        return Err(CliError::Usage(format!(
            "need 1 to 3 columns, got {} (use --columns)",
            selected.len()
        )));
    }
    Ok(selected)
}
