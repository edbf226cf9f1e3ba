//! Best fair single classifier that thresholds one feature and ignores `z`.

use serde::{Deserialize, Serialize};

use crate::classifiers::LinearClassifier;
use crate::dataset::{Dataset, Sensitive};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Accept iff `feature >= threshold`.
    Positive,
    /// Accept iff `feature <= threshold`.
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub feature: usize,
    pub threshold: f64,
    pub direction: Direction,
    pub accuracy: f64,
    /// Acceptance-rate gap, `z=0` minus `z=1`.
    pub gap: f64,
    pub classifier: LinearClassifier,
    pub candidates_examined: usize,
}

/// Sweeps every threshold position on `feature` (below all values, between
/// each pair of consecutive distinct values, above all values) in both
/// directions and returns the most accurate classifier whose acceptance-rate
/// gap is at most `tolerance`. Ties go to the smaller threshold, then to
/// [`Direction::Positive`].
pub fn best_fair_single_threshold(dataset: &Dataset, feature: usize, tolerance: f64) -> Result<ThresholdResult> {
    if feature >= dataset.dimension() {
        return Err(Error::InvalidArgument(format!(
            "feature index {feature} out of range for dimension {}",
            dataset.dimension()
        )));
    }
    let n_group = Sensitive::BOTH.map(|z| dataset.group_size(z) as u64);
    if n_group.contains(&0) {
        return Err(Error::UndefinedMetric {
            kind: "acceptance_rate".into(),
            member: 0,
        });
    }

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let value = |i: usize| dataset.instances()[i].features[feature];
    order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));

    // Sorted distinct values and, per value, counts by (z, y).
    let mut values: Vec<f64> = Vec::new();
    let mut cells: Vec<[[u64; 2]; 2]> = Vec::new();
    for &i in &order {
        let inst = &dataset.instances()[i];
        let v = value(i);
        if values.last().is_none_or(|&last| last != v) {
            values.push(v);
            cells.push([[0; 2]; 2]);
        }
        let cell = cells.last_mut().unwrap();
        cell[inst.sensitive.as_u8() as usize][usize::from(inst.label.is_positive())] += 1;
    }
    let total = cells.iter().fold([[0u64; 2]; 2], |mut acc, c| {
        for z in 0..2 {
            for y in 0..2 {
                acc[z][y] += c[z][y];
            }
        }
        acc
    });
    let negatives = total[0][0] + total[1][0];

    let k = values.len();
    let threshold_at = |pos: usize| -> f64 {
        if pos == 0 {
            values[0] - 1.0
        } else if pos == k {
            values[k - 1] + 1.0
        } else {
            values[pos - 1] + (values[pos] - values[pos - 1]) / 2.0
        }
    };

    // (correct count, position, direction)
    let mut best: Option<(u64, usize, Direction, f64)> = None;
    let mut below = [[0u64; 2]; 2];
    let mut examined = 0;
    for pos in 0..=k {
        if pos > 0 {
            for z in 0..2 {
                for y in 0..2 {
                    below[z][y] += cells[pos - 1][z][y];
                }
            }
        }
        for direction in [Direction::Positive, Direction::Negative] {
            examined += 1;
            // accepted[z][y]
            let accepted = match direction {
                Direction::Positive => [
                    [total[0][0] - below[0][0], total[0][1] - below[0][1]],
                    [total[1][0] - below[1][0], total[1][1] - below[1][1]],
                ],
                Direction::Negative => below,
            };
            let rate = |z: usize| (accepted[z][0] + accepted[z][1]) as f64 / n_group[z] as f64;
            let gap = rate(0) - rate(1);
            if gap.abs() > tolerance {
                continue;
            }
            let true_pos = accepted[0][1] + accepted[1][1];
            let false_pos = accepted[0][0] + accepted[1][0];
            let correct = true_pos + (negatives - false_pos);
            // Positions are visited in increasing threshold order and
            // Positive before Negative, so only a strict improvement wins.
            if best.is_none_or(|(c, ..)| correct > c) {
                best = Some((correct, pos, direction, gap));
            }
        }
    }

    let (correct, pos, direction, gap) = best.ok_or_else(|| {
        Error::InvalidArgument("no fair threshold classifier within tolerance".into())
    })?;
    let threshold = threshold_at(pos);
    let sign = match direction {
        Direction::Positive => 1.0,
        Direction::Negative => -1.0,
    };
    let mut weights = vec![0.0; dataset.dimension()];
    weights[feature] = sign;
    Ok(ThresholdResult {
        feature,
        threshold,
        direction,
        accuracy: correct as f64 / dataset.len() as f64,
        gap,
        classifier: LinearClassifier::blind(weights, -sign * threshold),
        candidates_examined: examined,
    })
}
