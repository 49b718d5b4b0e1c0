//! CSV ingestion: header row, feature columns, label in the last column.

use std::path::Path;

use som_cwm::concept::is_valid_name;
use som_cwm::Stimulus;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub label_column: String,
    pub rows: Vec<Stimulus<f64>>,
}

fn open(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.kind() {
        csv::ErrorKind::Io(_) => CliError::io(path, std::io::Error::other(e.to_string())),
        _ => CliError::Validation(format!("{}: {e}", path.display())),
    }
}

fn parse_features(
    path: &Path,
    row: usize,
    record: &csv::StringRecord,
    names: &[String],
) -> CliResult<Vec<f64>> {
    names
        .iter()
        .zip(record.iter())
        .map(|(name, cell)| {
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Validation(format!(
                    "{}: row {row}: column `{name}`: `{cell}` is not a number",
                    path.display()
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Validation(format!(
                    "{}: row {row}: column `{name}`: value must be finite",
                    path.display()
                )));
            }
            Ok(v)
        })
        .collect()
}

/// Reads a labelled dataset. Rows are numbered from 1 after the header and
/// become stimulus ids `r1`, `r2`, ...
pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let mut reader = open(path)?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() < 2 {
        return Err(CliError::Validation(format!(
            "{}: need at least one feature column and a label column",
            path.display()
        )));
    }
    let feature_names: Vec<String> = header
        .iter()
        .take(header.len() - 1)
        .map(String::from)
        .collect();
    let label_column = header[header.len() - 1].to_string();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != header.len() {
            return Err(CliError::Validation(format!(
                "{}: row {row}: expected {} fields, found {}",
                path.display(),
                header.len(),
                record.len()
            )));
        }
        let features = parse_features(path, row, &record, &feature_names)?;
        let label = &record[header.len() - 1];
        if !is_valid_name(label) {
            return Err(CliError::Validation(format!(
                "{}: row {row}: `{label}` is not a valid category name",
                path.display()
            )));
        }
        rows.push(Stimulus::new(format!("r{row}"), features, label));
    }
    if rows.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok(Dataset {
        feature_names,
        label_column,
        rows,
    })
}

/// Reads probe points: a header row followed by unlabelled feature rows.
/// An empty file yields no probes.
pub fn read_probes(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = open(path)?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let names: Vec<String> = header.iter().map(String::from).collect();
    let mut probes = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != names.len() {
            return Err(CliError::Validation(format!(
                "{}: row {row}: expected {} fields, found {}",
                path.display(),
                names.len(),
                record.len()
            )));
        }
        probes.push(parse_features(path, row, &record, &names)?);
    }
    Ok(probes)
}
