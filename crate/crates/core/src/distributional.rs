//! How evenly an ensemble spreads benefit probability inside each group.
//!
//! Inter-group parity says nothing about whether the same people always win.
//! These measures look at the per-instance acceptance probabilities `q_i`
//! within one group: their mean, population variance, Gini coefficient, and
//! the share of members whose outcome is fixed (`q_i` is 0 or 1). None of
//! them is a standard fairness measure; they are reported under an
//! `extension` label.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Sensitive};
use crate::ensemble::{BenefitProfile, Ensemble};
use crate::error::{Error, Result};

pub const DETERMINISM_TOLERANCE: f64 = 1e-12;

pub const EXTENSION_NOTE: &str =
    "extension: intra-group dispersion of per-instance acceptance probability (variance, Gini, determinism index)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupDispersion {
    pub z: Sensitive,
    pub size: usize,
    pub mean_q: Option<f64>,
    pub variance_q: Option<f64>,
    /// Undefined when the group mean is zero.
    pub gini_q: Option<f64>,
    pub determinism_index: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub extension: String,
    pub groups: Vec<GroupDispersion>,
}

impl DispersionReport {
    pub fn group(&self, z: Sensitive) -> &GroupDispersion {
        self.groups.iter().find(|g| g.z == z).expect("both groups present")
    }
}

/// Differences `a - b` of every field; `None` where either side is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionDelta {
    pub z: Sensitive,
    pub mean_q: Option<f64>,
    pub variance_q: Option<f64>,
    pub gini_q: Option<f64>,
    pub determinism_index: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionComparison {
    pub extension: String,
    pub a: DispersionReport,
    pub b: DispersionReport,
    pub deltas: Vec<DispersionDelta>,
}

pub fn dispersion(profile: &BenefitProfile, dataset: &Dataset) -> Result<DispersionReport> {
    if profile.len() != dataset.len() {
        return Err(Error::RowCountMismatch {
            expected: dataset.len(),
            found: profile.len(),
        });
    }
    let groups = Sensitive::BOTH
        .iter()
        .map(|&z| {
            let q: Vec<f64> = dataset.group_indices(z).into_iter().map(|i| profile.q[i]).collect();
            group_dispersion(z, &q)
        })
        .collect();
    Ok(DispersionReport {
        extension: EXTENSION_NOTE.to_string(),
        groups,
    })
}

pub fn group_dispersion(z: Sensitive, q: &[f64]) -> GroupDispersion {
    if q.is_empty() {
        return GroupDispersion {
            z,
            size: 0,
            mean_q: None,
            variance_q: None,
            gini_q: None,
            determinism_index: None,
        };
    }
    let n = q.len() as f64;
    let mean = q.iter().sum::<f64>() / n;
    let variance = q.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let deterministic = q
        .iter()
        .filter(|&&v| v.abs() <= DETERMINISM_TOLERANCE || (v - 1.0).abs() <= DETERMINISM_TOLERANCE)
        .count();
    GroupDispersion {
        z,
        size: q.len(),
        mean_q: Some(mean),
        variance_q: Some(variance.max(0.0)),
        gini_q: gini(q),
        determinism_index: Some(deterministic as f64 / n),
    }
}

/// `sum_i sum_k |q_i - q_k| / (2 n^2 mean)`, evaluated on sorted values.
pub fn gini(q: &[f64]) -> Option<f64> {
    if q.is_empty() {
        return None;
    }
    let n = q.len() as f64;
    let total: f64 = q.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut sorted = q.to_vec();
    sorted.sort_by(f64::total_cmp);
    // sum over ordered pairs of |a - b| = 2 * sum_i (2i - n + 1) x_(i)
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (2.0 * i as f64 - n + 1.0) * x)
        .sum();
    let mean = total / n;
    Some((2.0 * weighted / (2.0 * n * n * mean)).clamp(0.0, 1.0))
}

fn delta(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a? - b?)
}

pub fn compare_dispersion(a: &Ensemble, b: &Ensemble, dataset: &Dataset) -> Result<DispersionComparison> {
    let ra = a.dispersion(dataset)?;
    let rb = b.dispersion(dataset)?;
    let deltas = Sensitive::BOTH
        .iter()
        .map(|&z| {
            let (ga, gb) = (ra.group(z), rb.group(z));
            DispersionDelta {
                z,
                mean_q: delta(ga.mean_q, gb.mean_q),
                variance_q: delta(ga.variance_q, gb.variance_q),
                gini_q: delta(ga.gini_q, gb.gini_q),
                determinism_index: delta(ga.determinism_index, gb.determinism_index),
            }
        })
        .collect();
    Ok(DispersionComparison {
        extension: EXTENSION_NOTE.to_string(),
        a: ra,
        b: rb,
        deltas,
    })
}
