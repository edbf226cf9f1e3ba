//! Deterministic base classifiers: linear threshold functions and fixed
//! prediction tables.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Instance};
use crate::error::{Error, Result};

pub use crate::dataset::Label;

/// `+1` iff `weights . features + sensitive_weight * z + bias >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub weights: Vec<f64>,
    pub sensitive_weight: f64,
    pub bias: f64,
}

impl LinearClassifier {
    pub fn new(weights: Vec<f64>, sensitive_weight: f64, bias: f64) -> Self {
        Self {
            weights,
            sensitive_weight,
            bias,
        }
    }

    /// Ignores `z` entirely.
    pub fn blind(weights: Vec<f64>, bias: f64) -> Self {
        Self::new(weights, 0.0, bias)
    }

    pub fn score(&self, instance: &Instance) -> Result<f64> {
        if instance.features.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: instance.features.len(),
            });
        }
        let dot: f64 = self
            .weights
            .iter()
            .zip(&instance.features)
            .map(|(w, x)| w * x)
            .sum();
        Ok(dot + self.sensitive_weight * instance.sensitive.as_f64() + self.bias)
    }

    pub fn predict(&self, instance: &Instance) -> Result<Label> {
        // score exactly 0 is a positive prediction
        Ok(if self.score(instance)? >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        })
    }

    pub fn negated(&self) -> Self {
        Self {
            weights: self.weights.iter().map(|w| -w).collect(),
            sensitive_weight: -self.sensitive_weight,
            bias: -self.bias,
        }
    }
}

/// Precomputed labels for every instance of one specific dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TableClassifier {
    predictions: Vec<Label>,
    dataset_fingerprint: u64,
}

impl TableClassifier {
    pub fn new(predictions: Vec<Label>, dataset: &Dataset) -> Result<Self> {
        if predictions.len() != dataset.len() {
            return Err(Error::RowCountMismatch {
                expected: dataset.len(),
                found: predictions.len(),
            });
        }
        Ok(Self {
            predictions,
            dataset_fingerprint: dataset.fingerprint(),
        })
    }

    pub fn predictions(&self) -> &[Label] {
        &self.predictions
    }

    pub fn is_bound_to(&self, dataset: &Dataset) -> bool {
        self.dataset_fingerprint == dataset.fingerprint() && self.predictions.len() == dataset.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Linear(LinearClassifier),
    Table(TableClassifier),
}

impl From<LinearClassifier> for Classifier {
    fn from(c: LinearClassifier) -> Self {
        Classifier::Linear(c)
    }
}

impl From<TableClassifier> for Classifier {
    fn from(c: TableClassifier) -> Self {
        Classifier::Table(c)
    }
}

impl Classifier {
    /// Label for instance `index` of `dataset`.
    pub fn predict(&self, dataset: &Dataset, index: usize) -> Result<Label> {
        match self {
            Classifier::Linear(c) => c.predict(dataset.get(index)?),
            Classifier::Table(t) => {
                if !t.is_bound_to(dataset) {
                    return Err(Error::ForeignDataset);
                }
                dataset.get(index)?;
                Ok(t.predictions[index])
            }
        }
    }

    /// Label for instance `index` with its sensitive attribute flipped.
    pub fn predict_flipped(&self, dataset: &Dataset, index: usize) -> Result<Label> {
        match self {
            Classifier::Linear(c) => c.predict(&dataset.get(index)?.with_flipped_sensitive()),
            Classifier::Table(_) => Err(Error::TreatmentUnsupported),
        }
    }

    /// Label for an arbitrary instance, which need not belong to any dataset.
    pub fn predict_instance(&self, instance: &Instance) -> Result<Label> {
        match self {
            Classifier::Linear(c) => c.predict(instance),
            Classifier::Table(_) => Err(Error::TreatmentUnsupported),
        }
    }

    pub fn predict_all(&self, dataset: &Dataset) -> Result<Vec<Label>> {
        match self {
            Classifier::Linear(c) => dataset.instances().iter().map(|i| c.predict(i)).collect(),
            Classifier::Table(t) => {
                if !t.is_bound_to(dataset) {
                    return Err(Error::ForeignDataset);
                }
                Ok(t.predictions.clone())
            }
        }
    }

    pub fn supports_counterfactuals(&self) -> bool {
        matches!(self, Classifier::Linear(_))
    }
}

/// Reads a `clf_1,...,clf_M` matrix with one row per instance of `dataset`.
pub fn load_prediction_matrix(path: impl AsRef<Path>, dataset: &Dataset) -> Result<Vec<TableClassifier>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    prediction_matrix_from_reader(file, dataset)
}

pub fn prediction_matrix_from_reader<R: Read>(reader: R, dataset: &Dataset) -> Result<Vec<TableClassifier>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Csv {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let m = header.len();
    if m == 0 || header.iter().any(str::is_empty) {
        return Err(Error::Header("expected columns clf_1,...,clf_M".into()));
    }
    for (j, name) in header.iter().enumerate() {
        if name != format!("clf_{}", j + 1) {
            return Err(Error::Header(format!(
                "column {} should be clf_{}, found {name:?}",
                j + 1,
                j + 1
            )));
        }
    }

    let mut columns: Vec<Vec<Label>> = vec![Vec::with_capacity(dataset.len()); m];
    for (k, record) in rdr.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| Error::Csv {
            row,
            message: e.to_string(),
        })?;
        if record.len() != m {
            return Err(Error::Csv {
                row,
                message: format!("expected {m} fields, found {}", record.len()),
            });
        }
        for (col, value) in columns.iter_mut().zip(record.iter()) {
            col.push(Label::parse(value).ok_or_else(|| Error::InvalidLabel {
                row,
                value: value.to_string(),
            })?);
        }
    }
    let found = columns[0].len();
    if found != dataset.len() {
        return Err(Error::RowCountMismatch {
            expected: dataset.len(),
            found,
        });
    }
    columns
        .into_iter()
        .map(|c| TableClassifier::new(c, dataset))
        .collect()
}

/// Writes each classifier's `predict_all` as one column.
pub fn write_prediction_matrix<W: Write>(
    writer: W,
    members: &[Classifier],
    dataset: &Dataset,
) -> Result<()> {
    let columns = members
        .iter()
        .map(|c| c.predict_all(dataset))
        .collect::<Result<Vec<_>>>()?;
    let to_io = |e: csv::Error| Error::Csv {
        row: 0,
        message: e.to_string(),
    };
    let mut wtr = csv::Writer::from_writer(writer);
    let header: Vec<String> = (1..=members.len()).map(|j| format!("clf_{j}")).collect();
    wtr.write_record(&header).map_err(to_io)?;
    for i in 0..dataset.len() {
        let row: Vec<String> = columns.iter().map(|c| c[i].to_string()).collect();
        wtr.write_record(&row).map_err(to_io)?;
    }
    wtr.flush().map_err(|e| Error::Csv {
        row: 0,
        message: e.to_string(),
    })
}

pub fn save_prediction_matrix(path: impl AsRef<Path>, members: &[Classifier], dataset: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_prediction_matrix(file, members, dataset)
}
