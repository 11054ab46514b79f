use std::io::{Read, Write};
use std::path::Path;

use super::{FeatureMatrix, LabeledDataset, Scheme};
use crate::error::{Error, Result};

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let trimmed = cell.trim();
    if trimmed.is_empty() {
        return Err(Error::Ingestion { row, column: column.into(), reason: "missing value".into() });
    }
    let v: f64 = trimmed.parse().map_err(|_| Error::Ingestion {
        row,
        column: column.into(),
        reason: format!("cannot parse `{trimmed}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Ingestion { row, column: column.into(), reason: "non-finite value".into() });
    }
    Ok(v)
}

/// Read a labelled dataset from any reader. Rows are reported 0-based,
/// counting data rows after the header.
pub fn read_csv<R: Read>(reader: R, label_column: &str) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Schema(format!("label column `{label_column}` not found")))?;
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != label_idx).collect();
    if feature_cols.is_empty() {
        return Err(Error::Schema("no feature columns".into()));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Ingestion {
                row,
                column: "*".into(),
                reason: format!("{} fields, header has {}", record.len(), headers.len()),
            });
        }
        let raw = record[label_idx].trim();
        let label = match raw {
            "0" | "0.0" => 0u8,
            "1" | "1.0" => 1u8,
            other => {
                return Err(Error::Schema(format!(
                    "label `{other}` at row {row} is not 0 or 1"
                )))
            }
        };
        labels.push(label);
        for &c in &feature_cols {
            values.push(parse_cell(&record[c], row, &headers[c])?);
        }
    }
    let n = labels.len();
    let x = FeatureMatrix::new(values, n, feature_cols.len())?;
    LabeledDataset::new(x, labels, Scheme::Separate)
}

/// Load a labelled dataset. The label column must hold only 0/1.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<LabeledDataset> {
    read_csv(open(path.as_ref())?, label_column)
}

/// Load unlabelled points (e.g. local test locations). Columns listed in
/// `skip` are ignored if present.
pub fn load_points_csv(path: impl AsRef<Path>, skip: &[&str]) -> Result<FeatureMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(open(path.as_ref())?);
    let headers = rdr.headers()?.clone();
    let cols: Vec<usize> = (0..headers.len()).filter(|&c| !skip.contains(&&headers[c])).collect();
    if cols.is_empty() {
        return Err(Error::Schema("no coordinate columns".into()));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        for &c in &cols {
            let cell = record.get(c).ok_or_else(|| Error::Ingestion {
                row,
                column: headers[c].to_string(),
                reason: "missing field".into(),
            })?;
            values.push(parse_cell(cell, row, &headers[c])?);
        }
        rows += 1;
    }
    FeatureMatrix::new(values, rows, cols.len())
}

fn feature_header(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("x{j}")).collect()
}

/// Write features as `x1..xD` plus the label column. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_csv<W: Write>(data: &LabeledDataset, writer: W, label_column: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = feature_header(data.dim());
    header.push(label_column.to_string());
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(data.dim() + 1);
    for (row, &y) in data.features().iter_rows().zip(data.labels()) {
        record.clear();
        record.extend(row.iter().map(|v| v.to_string()));
        record.push(y.to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(|source| Error::Io { path: "<writer>".into(), source })?;
    Ok(())
}

pub fn write_points_csv(points: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path.as_ref())?);
    w.write_record(feature_header(points.cols()))?;
    for row in points.iter_rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|source| Error::Io { path: path.as_ref().to_path_buf(), source })?;
    Ok(())
}
