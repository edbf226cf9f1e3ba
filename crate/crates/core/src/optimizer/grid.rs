//! Exhaustive search over the simplex lattice `{k / r : k_j >= 0, sum k_j = r}`.
//!
//! Works entirely in integer counts so it shares no arithmetic with the LP.
//! A lattice point is feasible when each constrained gap is within
//! `tolerance` plus the lattice resolution bound `floor(M/2) * spread / r`,
//! where `spread` is the range of member gaps for that metric. Every feasible
//! mixture has a lattice neighbour inside that bound, so the relaxed set is
//! never empty when the exact problem is feasible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mixture::Objective;
use crate::classifiers::Classifier;
use crate::dataset::{Dataset, Sensitive};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricKind};

pub const MAX_MEMBERS: usize = 4;
pub const MIN_RESOLUTION: u64 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub resolution: u64,
    pub total_points: u64,
    /// Points within tolerance plus the resolution bound.
    pub feasible_points: u64,
    /// Points within the tolerance alone.
    pub strictly_feasible_points: u64,
    pub weights: Option<Vec<f64>>,
    pub accuracy: Option<f64>,
    pub strict_weights: Option<Vec<f64>>,
    pub strict_accuracy: Option<f64>,
}

struct Constraint {
    /// Gap of member j is `numerators[j] / denominator`.
    numerators: Vec<i128>,
    denominator: i128,
    slack_numerator: i128,
}

#[derive(Clone, Copy)]
struct Score<'a> {
    accuracy: i128,
    violation: f64,
    point: &'a [u64],
}

/// Candidate ordering: higher accuracy, then smaller worst gap, then the
/// lexicographically smallest lattice vector.
fn better(a: &Candidate, b: &Candidate) -> bool {
    a.accuracy > b.accuracy
        || a.accuracy == b.accuracy
            && (a.violation < b.violation || a.violation == b.violation && a.point < b.point)
}

#[derive(Clone, Debug)]
struct Candidate {
    accuracy: i128,
    violation: f64,
    point: Vec<u64>,
}

impl<'a> From<Score<'a>> for Candidate {
    fn from(s: Score<'a>) -> Self {
        Candidate {
            accuracy: s.accuracy,
            violation: s.violation,
            point: s.point.to_vec(),
        }
    }
}

#[derive(Default)]
struct Partial {
    total: u64,
    feasible: u64,
    strict: u64,
    best: Option<Candidate>,
    best_strict: Option<Candidate>,
}

fn keep_score(slot: &mut Option<Candidate>, s: &Score<'_>) {
    let wins = match slot {
        None => true,
        Some(cur) => {
            s.accuracy > cur.accuracy
                || s.accuracy == cur.accuracy
                    && (s.violation < cur.violation || s.violation == cur.violation && s.point < cur.point.as_slice())
        }
    };
    if wins {
        *slot = Some((*s).into());
    }
}

fn keep(slot: &mut Option<Candidate>, c: Option<Candidate>) {
    if let Some(c) = c {
        match slot {
            Some(cur) if !better(&c, cur) => {}
            _ => *slot = Some(c),
        }
    }
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        self.total += other.total;
        self.feasible += other.feasible;
        self.strict += other.strict;
        keep(&mut self.best, other.best);
        keep(&mut self.best_strict, other.best_strict);
        self
    }
}

pub fn grid_oracle(
    members: &[Classifier],
    dataset: &Dataset,
    constrained: &[MetricKind],
    tolerance: f64,
    resolution: u64,
    objective: Objective,
) -> Result<GridResult> {
    let m = members.len();
    if m == 0 || m > MAX_MEMBERS {
        return Err(Error::InvalidArgument(format!(
            "grid oracle supports 1 to {MAX_MEMBERS} members, got {m}"
        )));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must be at least {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be >= 0, got {tolerance}")));
    }
    let preds = members
        .iter()
        .map(|c| c.predict_all(dataset))
        .collect::<Result<Vec<_>>>()?;
    let correct: Vec<i128> = match objective {
        Objective::MaxAccuracy => preds
            .iter()
            .map(|p| metrics::correct_count(p, dataset).map(i128::from))
            .collect::<Result<_>>()?,
        Objective::FeasibilityOnly => vec![0; m],
    };

    let mut kinds = constrained.to_vec();
    kinds.sort();
    kinds.dedup();
    let mut constraints = Vec::new();
    for kind in kinds {
        if !kind.is_linear() {
            return Err(Error::NonlinearConstraint(kind.to_string()));
        }
        let mut numerators = Vec::with_capacity(m);
        let mut totals = (0i128, 0i128);
        for (j, p) in preds.iter().enumerate() {
            let c0 = metrics::rate_counts(kind, p, dataset, Sensitive::Zero)?;
            let c1 = metrics::rate_counts(kind, p, dataset, Sensitive::One)?;
            if c0.total == 0 || c1.total == 0 {
                return Err(Error::UndefinedMetric {
                    kind: kind.to_string(),
                    member: j + 1,
                });
            }
            totals = (c0.total.into(), c1.total.into());
            numerators.push(i128::from(c0.hits) * totals.1 - i128::from(c1.hits) * totals.0);
        }
        let spread = numerators.iter().max().unwrap() - numerators.iter().min().unwrap();
        constraints.push(Constraint {
            numerators,
            denominator: totals.0 * totals.1,
            slack_numerator: (m as i128 / 2) * spread,
        });
    }
    if tolerance.is_infinite() {
        constraints.clear();
    }

    let r = resolution;
    let evaluate = |point: &[u64], acc: &mut Partial| {
        acc.total += 1;
        let accuracy: i128 = point.iter().zip(&correct).map(|(&k, &c)| i128::from(k) * c).sum();
        let mut relaxed_ok = true;
        let mut strict_ok = true;
        let mut violation: f64 = 0.0;
        for c in &constraints {
            let num: i128 = point.iter().zip(&c.numerators).map(|(&k, &g)| i128::from(k) * g).sum();
            // gap = num / (r * denominator)
            let scale = (r as i128 * c.denominator) as f64;
            let abs = num.abs();
            let tol_num = tolerance * scale;
            strict_ok &= (abs as f64) <= tol_num;
            relaxed_ok &= (abs as f64) <= tol_num + c.slack_numerator as f64;
            violation = violation.max(abs as f64 / scale);
        }
        let score = Score {
            accuracy,
            violation,
            point,
        };
        if relaxed_ok {
            acc.feasible += 1;
            keep_score(&mut acc.best, &score);
        }
        if strict_ok {
            acc.strict += 1;
            keep_score(&mut acc.best_strict, &score);
        }
    };

    let partial = (0..=r)
        .into_par_iter()
        .map(|first| {
            let mut acc = Partial::default();
            let mut point = vec![0u64; m];
            point[0] = first;
            enumerate(&mut point, 1, r - first, &mut |p| evaluate(p, &mut acc));
            acc
        })
        .reduce(Partial::default, Partial::merge);

    let n = dataset.len() as f64;
    let to_weights = |c: &Candidate| c.point.iter().map(|&k| k as f64 / r as f64).collect::<Vec<_>>();
    let to_accuracy = |c: &Candidate| {
        let total: u64 = c.point.iter().zip(&preds).map(|(&k, p)| k * metrics::correct_count(p, dataset).unwrap_or(0)).sum();
        total as f64 / (r as f64 * n)
    };
    Ok(GridResult {
        resolution: r,
        total_points: partial.total,
        feasible_points: partial.feasible,
        strictly_feasible_points: partial.strict,
        weights: partial.best.as_ref().map(to_weights),
        accuracy: partial.best.as_ref().map(to_accuracy),
        strict_weights: partial.best_strict.as_ref().map(to_weights),
        strict_accuracy: partial.best_strict.as_ref().map(to_accuracy),
    })
}

/// Fills `point[pos..]` with every composition of `remaining`.
fn enumerate(point: &mut [u64], pos: usize, remaining: u64, visit: &mut impl FnMut(&[u64])) {
    if pos == point.len() {
        if remaining == 0 {
            visit(point);
        }
        return;
    }
    if pos == point.len() - 1 {
        point[pos] = remaining;
        visit(point);
        return;
    }
    for k in 0..=remaining {
        point[pos] = k;
        enumerate(point, pos + 1, remaining - k, visit);
    }
}
