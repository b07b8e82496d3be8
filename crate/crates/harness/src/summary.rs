//! Box-plot statistics of final fitness per method group.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::experiment::RunRecord;

pub const SUMMARY_HEADER: &str = "method,distance,pd_samples,n_reps,median,q1,q3,min,max";

#[derive(Debug, Error)]
pub enum SummaryError {
    #[error("no completed runs to summarize")]
    Empty,
    #[error("no *_runs.csv files in {0}")]
    NoRunFiles(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// Final fitness of one completed replication.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FinalValue {
    pub method: String,
    pub distance: String,
    pub pd_samples: String,
    pub final_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub distance: String,
    pub pd_samples: String,
    pub n_reps: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

/// Quantile of sorted data by linear interpolation between order
/// statistics (`h = (n - 1) p`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// One row per (method, distance, sample set), in lexicographic order.
pub fn summarize(values: &[FinalValue]) -> Result<Vec<SummaryRow>, SummaryError> {
    if values.is_empty() {
        return Err(SummaryError::Empty);
    }
    let mut groups: BTreeMap<(&str, &str, &str), Vec<f64>> = BTreeMap::new();
    for v in values {
        groups
            .entry((&v.method, &v.distance, &v.pd_samples))
            .or_default()
            .push(v.final_fitness);
    }
    Ok(groups
        .into_iter()
        .map(|((method, distance, pd_samples), mut xs)| {
            xs.sort_by(f64::total_cmp);
            SummaryRow {
                method: method.to_owned(),
                distance: distance.to_owned(),
                pd_samples: pd_samples.to_owned(),
                n_reps: xs.len(),
                median: quantile(&xs, 0.5),
                q1: quantile(&xs, 0.25),
                q3: quantile(&xs, 0.75),
                min: xs[0],
                max: xs[xs.len() - 1],
            }
        })
        .collect())
}

/// Final values of the completed replications in `records`.
pub fn final_values(records: &[RunRecord]) -> Vec<FinalValue> {
    records
        .iter()
        .filter_map(|r| {
            r.outcome.as_ref().ok().map(|o| FinalValue {
                method: r.method.clone(),
                distance: r.distance.clone(),
                pd_samples: r.pd_samples.clone(),
                final_fitness: o.final_fitness,
            })
        })
        .collect()
}

#[derive(Deserialize)]
struct RunsRow {
    method: String,
    distance: String,
    pd_samples: String,
    final_fitness: Option<f64>,
    status: String,
}

/// Reads the completed runs from every `*_runs.csv` file in `dir`.
pub fn read_runs_dir(dir: &Path) -> Result<Vec<FinalValue>, SummaryError> {
    let io = |source| SummaryError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    files.retain(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with("_runs.csv")));
    files.sort();
    if files.is_empty() {
        return Err(SummaryError::NoRunFiles(dir.display().to_string()));
    }
    let mut values = Vec::new();
    for path in files {
        let csv_err = |source| SummaryError::Csv {
            path: path.display().to_string(),
            source,
        };
        let mut reader = csv::Reader::from_path(&path).map_err(csv_err)?;
        for row in reader.deserialize::<RunsRow>() {
            let row = row.map_err(csv_err)?;
            if let (Some(final_fitness), "ok") = (row.final_fitness, row.status.as_str()) {
                values.push(FinalValue {
                    method: row.method,
                    distance: row.distance,
                    pd_samples: row.pd_samples,
                    final_fitness,
                });
            }
        }
    }
    Ok(values)
}

pub fn write_summary_csv(rows: &[SummaryRow], writer: impl Write) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{:.12},{:.12},{:.12},{:.12},{:.12}",
            r.method, r.distance, r.pd_samples, r.n_reps, r.median, r.q1, r.q3, r.min, r.max
        )?;
    }
    w.flush()
}
