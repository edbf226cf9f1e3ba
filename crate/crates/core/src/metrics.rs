//! Accuracy, per-group benefit rates and their inter-group gaps, and
//! equality-of-treatment checks for single classifiers.
//!
//! Every rate is a ratio of integer counts over a conditioning set. An empty
//! conditioning set gives an undefined rate (`None`), never zero.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, Label};
use crate::dataset::{CounterfactualPair, Dataset, Sensitive};
use crate::distributional::DispersionReport;
use crate::error::{Error, Result};

/// A rate that is `None` when its conditioning set is empty.
pub type Rate = Option<f64>;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

pub const GAP_CONVENTION: &str = "value(z=0) - value(z=1)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    AcceptanceRate,
    Tpr,
    Tnr,
    Ppv,
    Npv,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::AcceptanceRate,
        MetricKind::Tpr,
        MetricKind::Tnr,
        MetricKind::Ppv,
        MetricKind::Npv,
    ];

    pub const LINEAR: [MetricKind; 3] = [MetricKind::AcceptanceRate, MetricKind::Tpr, MetricKind::Tnr];

    /// Whether the group rate of a mixture is the mixture of member rates.
    pub fn is_linear(self) -> bool {
        matches!(self, MetricKind::AcceptanceRate | MetricKind::Tpr | MetricKind::Tnr)
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::AcceptanceRate => "acceptance_rate",
            MetricKind::Tpr => "tpr",
            MetricKind::Tnr => "tnr",
            MetricKind::Ppv => "ppv",
            MetricKind::Npv => "npv",
        }
    }

    /// Whether instance `(y, yhat)` belongs to the conditioning set, and if
    /// so whether it counts toward the numerator.
    pub(crate) fn classify(self, label: Label, predicted: Label) -> Option<bool> {
        match self {
            MetricKind::AcceptanceRate => Some(predicted.is_positive()),
            MetricKind::Tpr => label.is_positive().then_some(predicted.is_positive()),
            MetricKind::Tnr => (!label.is_positive()).then_some(!predicted.is_positive()),
            MetricKind::Ppv => predicted.is_positive().then_some(label.is_positive()),
            MetricKind::Npv => (!predicted.is_positive()).then_some(!label.is_positive()),
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "acceptance_rate" | "acceptance" | "ar" => Ok(MetricKind::AcceptanceRate),
            "tpr" => Ok(MetricKind::Tpr),
            "tnr" => Ok(MetricKind::Tnr),
            "ppv" => Ok(MetricKind::Ppv),
            "npv" => Ok(MetricKind::Npv),
            other => Err(Error::InvalidArgument(format!("unknown metric {other:?}"))),
        }
    }
}

/// Numerator and denominator of a group rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RateCounts {
    pub hits: u64,
    pub total: u64,
}

impl RateCounts {
    pub fn rate(self) -> Rate {
        (self.total > 0).then(|| self.hits as f64 / self.total as f64)
    }
}

fn check_len(predictions: &[Label], dataset: &Dataset) -> Result<()> {
    if predictions.len() != dataset.len() {
        return Err(Error::RowCountMismatch {
            expected: dataset.len(),
            found: predictions.len(),
        });
    }
    Ok(())
}

pub fn correct_count(predictions: &[Label], dataset: &Dataset) -> Result<u64> {
    check_len(predictions, dataset)?;
    Ok(predictions
        .iter()
        .zip(dataset.labels())
        .filter(|(p, y)| *p == y)
        .count() as u64)
}

pub fn accuracy(predictions: &[Label], dataset: &Dataset) -> Result<f64> {
    Ok(correct_count(predictions, dataset)? as f64 / dataset.len() as f64)
}

pub fn rate_counts(
    kind: MetricKind,
    predictions: &[Label],
    dataset: &Dataset,
    z: Sensitive,
) -> Result<RateCounts> {
    check_len(predictions, dataset)?;
    let mut counts = RateCounts::default();
    for (inst, &yhat) in dataset.instances().iter().zip(predictions) {
        if inst.sensitive != z {
            continue;
        }
        if let Some(hit) = kind.classify(inst.label, yhat) {
            counts.total += 1;
            counts.hits += u64::from(hit);
        }
    }
    Ok(counts)
}

pub fn group_rate(kind: MetricKind, predictions: &[Label], dataset: &Dataset, z: Sensitive) -> Result<Rate> {
    Ok(rate_counts(kind, predictions, dataset, z)?.rate())
}

pub fn fairness_gap(kind: MetricKind, predictions: &[Label], dataset: &Dataset) -> Result<Rate> {
    Ok(gap_of(
        group_rate(kind, predictions, dataset, Sensitive::Zero)?,
        group_rate(kind, predictions, dataset, Sensitive::One)?,
    ))
}

pub(crate) fn gap_of(z0: Rate, z1: Rate) -> Rate {
    Some(z0? - z1?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMetric {
    pub kind: MetricKind,
    pub value_z0: Rate,
    pub value_z1: Rate,
    pub gap: Rate,
}

impl GroupMetric {
    pub fn new(kind: MetricKind, value_z0: Rate, value_z1: Rate) -> Self {
        Self {
            kind,
            value_z0,
            value_z1,
            gap: gap_of(value_z0, value_z1),
        }
    }

    pub fn from_predictions(kind: MetricKind, predictions: &[Label], dataset: &Dataset) -> Result<Self> {
        Ok(Self::new(
            kind,
            group_rate(kind, predictions, dataset, Sensitive::Zero)?,
            group_rate(kind, predictions, dataset, Sensitive::One)?,
        ))
    }

    /// `None` means not assessable.
    pub fn passes(&self, tolerance: f64) -> Option<bool> {
        self.gap.map(|g| g.abs() <= tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricEntry {
    pub kind: MetricKind,
    pub value_z0: Rate,
    pub value_z1: Rate,
    pub gap: Rate,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentSummary {
    /// Number of violating counterfactual pairs.
    pub violations: usize,
    /// Counterfactual pairs examined.
    pub examined: usize,
    /// Violating pairs as 1-based `[left, right]`.
    pub pairs: Vec<[usize; 2]>,
    /// 1-based instances whose outcome changes when only `z` is flipped;
    /// `None` when the model cannot be evaluated off-dataset.
    pub flip_violations: Option<Vec<usize>>,
}

impl TreatmentSummary {
    pub fn new(
        examined: usize,
        violating: &[CounterfactualPair],
        flip_violations: Option<Vec<usize>>,
    ) -> Self {
        Self {
            violations: violating.len(),
            examined,
            pairs: violating.iter().map(|p| [p.left + 1, p.right + 1]).collect(),
            flip_violations: flip_violations.map(|v| v.into_iter().map(|i| i + 1).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub accuracy: f64,
    pub metrics: Vec<MetricEntry>,
    pub treatment: TreatmentSummary,
    pub tolerance: f64,
    pub gap_convention: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distributional: Option<DispersionReport>,
}

impl FairnessReport {
    pub fn new(accuracy: f64, metrics: &[GroupMetric], treatment: TreatmentSummary, tolerance: f64) -> Self {
        Self {
            accuracy,
            metrics: metrics
                .iter()
                .map(|m| MetricEntry {
                    kind: m.kind,
                    value_z0: m.value_z0,
                    value_z1: m.value_z1,
                    gap: m.gap,
                    pass: m.passes(tolerance),
                })
                .collect(),
            treatment,
            tolerance,
            gap_convention: GAP_CONVENTION.to_string(),
            distributional: None,
        }
    }

    pub fn metric(&self, kind: MetricKind) -> Option<&MetricEntry> {
        self.metrics.iter().find(|m| m.kind == kind)
    }
}

/// Pairs whose two members receive different labels.
pub fn treatment_violations(
    classifier: &Classifier,
    dataset: &Dataset,
    pairs: &[CounterfactualPair],
) -> Result<Vec<CounterfactualPair>> {
    let mut out = Vec::new();
    for &pair in pairs {
        if classifier.predict(dataset, pair.left)? != classifier.predict(dataset, pair.right)? {
            out.push(pair);
        }
    }
    Ok(out)
}

/// Instances whose label changes when `z` alone is flipped. Fails for
/// prediction tables.
pub fn flip_violations(classifier: &Classifier, dataset: &Dataset) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for i in 0..dataset.len() {
        if classifier.predict(dataset, i)? != classifier.predict_flipped(dataset, i)? {
            out.push(i);
        }
    }
    Ok(out)
}

pub fn audit_classifier(classifier: &Classifier, dataset: &Dataset, tolerance: f64) -> Result<FairnessReport> {
    let predictions = classifier.predict_all(dataset)?;
    let metrics = MetricKind::ALL
        .iter()
        .map(|&k| GroupMetric::from_predictions(k, &predictions, dataset))
        .collect::<Result<Vec<_>>>()?;
    let pairs = dataset.counterfactual_pairs();
    let violating = treatment_violations(classifier, dataset, &pairs)?;
    let flips = if classifier.supports_counterfactuals() {
        Some(flip_violations(classifier, dataset)?)
    } else {
        None
    };
    Ok(FairnessReport::new(
        accuracy(&predictions, dataset)?,
        &metrics,
        TreatmentSummary::new(pairs.len(), &violating, flips),
        tolerance,
    ))
}
