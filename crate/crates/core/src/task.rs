//! Classification task and the adjusted-accuracy fitness.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::genome::{softmax_in_place, FeatureMatrix, Genome, Phenotype};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("{features} feature rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("dataset is empty")]
    Empty,
    #[error("label {label} at row {row} is not below the class count {n_classes}")]
    LabelOutOfRange {
        row: usize,
        label: usize,
        n_classes: usize,
    },
    #[error("non-finite feature value at row {row}")]
    NonFinite { row: usize },
}

/// Labelled samples with features min-max scaled per column to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: FeatureMatrix,
    labels: Vec<usize>,
    n_classes: usize,
    /// Per-column `(min, max)` of the raw features.
    scaling: Vec<(f64, f64)>,
}

impl Dataset {
    /// Scales `raw` column-wise to `[0, 1]`. Constant columns map to 0.
    pub fn from_raw(raw: &FeatureMatrix, labels: Vec<usize>, n_classes: usize) -> Result<Self, DatasetError> {
        if raw.n_rows() != labels.len() {
            return Err(DatasetError::LengthMismatch {
                features: raw.n_rows(),
                labels: labels.len(),
            });
        }
        if labels.is_empty() {
            return Err(DatasetError::Empty);
        }
        if let Some(row) = raw.rows().position(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(DatasetError::NonFinite { row });
        }
        if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= n_classes) {
            return Err(DatasetError::LabelOutOfRange { row, label, n_classes });
        }
        let scaling: Vec<(f64, f64)> = (0..raw.n_cols())
            .map(|j| {
                raw.column(j)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
            })
            .collect();
        let mut data = Vec::with_capacity(raw.as_slice().len());
        for row in raw.rows() {
            data.extend(row.iter().zip(&scaling).map(|(&v, &(lo, hi))| {
                if hi > lo {
                    (v - lo) / (hi - lo)
                } else {
                    0.0
                }
            }));
        }
        Ok(Dataset {
            features: FeatureMatrix::new(raw.n_cols(), data),
            labels,
            n_classes,
            scaling,
        })
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn scaling(&self) -> &[(f64, f64)] {
        &self.scaling
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Mean over samples of 1 for a correct argmax prediction, otherwise the
/// predicted probability of the true class. Lies in `[0, 1]`.
pub fn adjusted_accuracy(genome: &Genome, data: &Dataset) -> f64 {
    assert_eq!(genome.config().n_inputs(), data.features.n_cols(), "input width");
    assert_eq!(genome.config().n_outputs(), data.n_classes, "class count");
    let mut raw = vec![0.0; data.len() * data.n_classes];
    Phenotype::new(genome).evaluate_batch(&data.features, &mut Vec::new(), &mut raw);
    let mut total = 0.0;
    for (p, &label) in raw.chunks_exact_mut(data.n_classes).zip(&data.labels) {
        softmax_in_place(p);
        total += if argmax(p) == label { 1.0 } else { p[label] };
    }
    total / data.len() as f64
}
