use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::simplex::{simplex_solve, LinearProgram, SolveStatus};
use crate::classifiers::Classifier;
use crate::dataset::Dataset;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::metrics::{self, MetricKind, Rate};

/// Slack allowed when re-checking a solution through the ensemble module.
pub const VERIFY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MaxAccuracy,
    FeasibilityOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub accuracy: f64,
    pub gaps: BTreeMap<MetricKind, Rate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSolution {
    pub status: SolveStatus,
    pub objective: Objective,
    pub tolerance: f64,
    pub constrained: Vec<MetricKind>,
    /// Empty unless optimal.
    pub weights: Vec<f64>,
    pub accuracy: Option<f64>,
    /// Achieved gap of each constrained metric.
    pub gaps: BTreeMap<MetricKind, f64>,
    /// PPV and NPV gaps of the solution; not constrained.
    pub posthoc_gaps: BTreeMap<MetricKind, Rate>,
    pub members: Vec<MemberSummary>,
    pub pivots: usize,
}

/// Most accurate (or any feasible) mixture whose constrained gaps lie in
/// `[-tolerance, tolerance]`. An infinite tolerance drops the constraints.
pub fn solve_fair_mixture(
    members: &[Classifier],
    dataset: &Dataset,
    constrained: &[MetricKind],
    tolerance: f64,
    objective: Objective,
) -> Result<MixtureSolution> {
    if members.is_empty() {
        return Err(Error::InvalidArgument("no members to mix".into()));
    }
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be >= 0, got {tolerance}")));
    }
    let mut kinds: Vec<MetricKind> = constrained.to_vec();
    kinds.sort();
    kinds.dedup();
    if let Some(k) = kinds.iter().find(|k| !k.is_linear()) {
        return Err(Error::NonlinearConstraint(k.to_string()));
    }

    let preds = members
        .iter()
        .map(|c| c.predict_all(dataset))
        .collect::<Result<Vec<_>>>()?;
    let summaries = preds
        .iter()
        .map(|p| {
            Ok(MemberSummary {
                accuracy: metrics::accuracy(p, dataset)?,
                gaps: MetricKind::ALL
                    .iter()
                    .map(|&k| Ok((k, metrics::fairness_gap(k, p, dataset)?)))
                    .collect::<Result<_>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let objective_row: Vec<f64> = match objective {
        Objective::MaxAccuracy => summaries.iter().map(|s| s.accuracy).collect(),
        Objective::FeasibilityOnly => vec![0.0; members.len()],
    };
    let mut lp = LinearProgram::on_simplex(objective_row);
    for &kind in &kinds {
        let row = summaries
            .iter()
            .enumerate()
            .map(|(j, s)| {
                s.gaps[&kind].ok_or_else(|| Error::UndefinedMetric {
                    kind: kind.to_string(),
                    member: j + 1,
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if tolerance.is_finite() {
            lp.add_le(row.clone(), tolerance);
            lp.add_ge(row, -tolerance);
        }
    }

    let lp_solution = simplex_solve(&lp)?;
    let mut solution = MixtureSolution {
        status: lp_solution.status,
        objective,
        tolerance,
        constrained: kinds.clone(),
        weights: Vec::new(),
        accuracy: None,
        gaps: BTreeMap::new(),
        posthoc_gaps: BTreeMap::new(),
        members: summaries,
        pivots: lp_solution.pivots,
    };
    if lp_solution.status != SolveStatus::Optimal {
        return Ok(solution);
    }

    let weights = clean_weights(&lp_solution.x);
    let ensemble = Ensemble::new(members.to_vec(), weights.clone())?;
    let accuracy = ensemble.accuracy(dataset)?;
    if objective == Objective::MaxAccuracy {
        let lp_value = lp_solution.value.unwrap_or(f64::NAN);
        if (accuracy - lp_value).abs() > VERIFY_TOLERANCE {
            return Err(Error::Verification(format!(
                "ensemble accuracy {accuracy} differs from LP value {lp_value}"
            )));
        }
    }
    for &kind in &kinds {
        let gap = ensemble.gap(kind, dataset)?.ok_or_else(|| Error::UndefinedMetric {
            kind: kind.to_string(),
            member: 0,
        })?;
        if gap.abs() > tolerance + VERIFY_TOLERANCE {
            return Err(Error::Verification(format!(
                "{kind} gap {gap} exceeds tolerance {tolerance}"
            )));
        }
        solution.gaps.insert(kind, gap);
    }
    for kind in [MetricKind::Ppv, MetricKind::Npv] {
        solution.posthoc_gaps.insert(kind, ensemble.gap(kind, dataset)?);
    }
    solution.weights = weights;
    solution.accuracy = Some(accuracy);
    Ok(solution)
}

/// Clears round-off negatives and renormalizes onto the simplex.
fn clean_weights(x: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|&v| if v < 0.0 { 0.0 } else { v }).collect();
    let total: f64 = clipped.iter().sum();
    clipped.iter().map(|v| v / total).collect()
}
