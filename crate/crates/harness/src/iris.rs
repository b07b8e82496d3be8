//! IRIS CSV ingestion.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use cgp_smbo::genome::FeatureMatrix;
use cgp_smbo::task::{Dataset, DatasetError};
use thiserror::Error;

pub const IRIS_HEADER: [&str; 5] = ["sepal_length", "sepal_width", "petal_length", "petal_width", "species"];
pub const IRIS_ROWS: usize = 150;
pub const SPECIES: [&str; 3] = ["setosa", "versicolor", "virginica"];

#[derive(Debug, Error)]
pub enum IrisError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: expected 5 columns, found {found}")]
    ColumnCount { line: u64, found: usize },
    #[error("line {line}: cannot parse {value:?} as a number")]
    Number { line: u64, value: String },
    #[error("line {line}: unknown species {value:?}")]
    Species { line: u64, value: String },
    #[error("expected 150 data rows, found {0}")]
    RowCount(usize),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Reads and scales the IRIS CSV at `path`.
pub fn load_iris(path: impl AsRef<Path>) -> Result<Dataset, IrisError> {
    let path = path.as_ref();
    let io = |source| IrisError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut text = String::new();
    File::open(path).and_then(|mut f| f.read_to_string(&mut text)).map_err(io)?;
    parse_iris(text.as_bytes())
}

/// Parses IRIS CSV text: a header row, then four measurements and a species
/// per row. Species are names (case-insensitive) or the indices 0, 1, 2.
pub fn parse_iris(reader: impl Read) -> Result<Dataset, IrisError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::with_capacity(IRIS_ROWS);
    let mut labels = Vec::with_capacity(IRIS_ROWS);
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 5 {
            return Err(IrisError::ColumnCount {
                line,
                found: record.len(),
            });
        }
        let mut row = [0.0; 4];
        for (slot, field) in row.iter_mut().zip(record.iter()) {
            *slot = field.parse().map_err(|_| IrisError::Number {
                line,
                value: field.to_owned(),
            })?;
        }
        rows.push(row);
        labels.push(parse_species(&record[4]).ok_or_else(|| IrisError::Species {
            line,
            value: record[4].to_owned(),
        })?);
    }
    if rows.len() != IRIS_ROWS {
        return Err(IrisError::RowCount(rows.len()));
    }
    Ok(Dataset::from_raw(&FeatureMatrix::from_rows(4, rows), labels, 3)?)
}

fn parse_species(field: &str) -> Option<usize> {
    let lower = field.to_ascii_lowercase();
    let name = lower.strip_prefix("iris-").unwrap_or(&lower);
    SPECIES
        .iter()
        .position(|s| *s == name)
        .or_else(|| field.parse().ok().filter(|&i: &usize| i < 3))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn species_names_and_indices() {
        assert_eq!(parse_species("setosa"), Some(0));
        assert_eq!(parse_species("Versicolor"), Some(1));
        assert_eq!(parse_species("Iris-virginica"), Some(2));
        assert_eq!(parse_species("2"), Some(2));
        assert_eq!(parse_species("3"), None);
        assert_eq!(parse_species("rose"), None);
    }
}
