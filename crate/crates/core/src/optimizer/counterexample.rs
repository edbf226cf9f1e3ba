//! Randomized search for two PPV-fair classifiers whose uniform mixture is
//! not PPV-fair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, Label, TableClassifier};
use crate::dataset::{Dataset, Instance, Sensitive};
use crate::metrics::{rate_counts, MetricKind, RateCounts};

pub const MIN_ENSEMBLE_GAP: f64 = 0.05;
const MIN_SIZE: usize = 4;
const MAX_SIZE: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct PpvWitness {
    pub seed: u64,
    /// 1-based trial that produced the witness.
    pub trial: usize,
    pub dataset: Dataset,
    pub members: Vec<TableClassifier>,
    pub weights: Vec<f64>,
    /// Per member: `[z=0, z=1]` (hits, total) of PPV.
    pub member_counts: Vec<[RateCounts; 2]>,
    pub member_gaps: Vec<f64>,
    pub ensemble_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub seed: u64,
    pub trial: usize,
    pub n: usize,
    pub weights: Vec<f64>,
    pub member_ppv: Vec<[String; 2]>,
    pub member_gaps: Vec<f64>,
    pub ensemble_gap: f64,
}

impl PpvWitness {
    pub fn classifiers(&self) -> Vec<Classifier> {
        self.members.iter().cloned().map(Classifier::from).collect()
    }

    pub fn summary(&self) -> WitnessSummary {
        WitnessSummary {
            seed: self.seed,
            trial: self.trial,
            n: self.dataset.len(),
            weights: self.weights.clone(),
            member_ppv: self
                .member_counts
                .iter()
                .map(|c| c.map(|rc| format!("{}/{}", rc.hits, rc.total)))
                .collect(),
            member_gaps: self.member_gaps.clone(),
            ensemble_gap: self.ensemble_gap,
        }
    }
}

/// Each trial draws a dataset of 4 to 12 instances with distinct features and
/// two random prediction vectors. A trial is a witness when both members have
/// defined and exactly equal PPV in the two groups (compared by
/// cross-multiplying counts) and the uniform mixture's PPV gap is at least
/// 0.05. Returns `None` after `max_trials` misses.
pub fn ppv_counterexample_search(seed: u64, max_trials: usize) -> Option<PpvWitness> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 1..=max_trials {
        let n = rng.random_range(MIN_SIZE..=MAX_SIZE);
        let instances: Vec<Instance> = (0..n)
            .map(|i| {
                let label = if rng.random::<bool>() { Label::Positive } else { Label::Negative };
                let z = if rng.random::<bool>() { Sensitive::One } else { Sensitive::Zero };
                Instance::new(vec![i as f64], label, z)
            })
            .collect();
        let predictions: [Vec<Label>; 2] = std::array::from_fn(|_| {
            (0..n)
                .map(|_| if rng.random::<bool>() { Label::Positive } else { Label::Negative })
                .collect()
        });
        let Ok(dataset) = Dataset::new(instances) else {
            continue;
        };
        if predictions[0] == predictions[1] {
            continue;
        }
        if let Some(w) = check(&dataset, &predictions) {
            let members = predictions
                .iter()
                .map(|p| TableClassifier::new(p.clone(), &dataset).expect("length matches"))
                .collect();
            return Some(PpvWitness {
                seed,
                trial,
                dataset,
                members,
                weights: vec![0.5, 0.5],
                member_counts: w.0,
                member_gaps: vec![0.0, 0.0],
                ensemble_gap: w.1,
            });
        }
    }
    None
}

fn check(dataset: &Dataset, predictions: &[Vec<Label>; 2]) -> Option<(Vec<[RateCounts; 2]>, f64)> {
    let mut counts = Vec::with_capacity(2);
    for p in predictions {
        let c0 = rate_counts(MetricKind::Ppv, p, dataset, Sensitive::Zero).ok()?;
        let c1 = rate_counts(MetricKind::Ppv, p, dataset, Sensitive::One).ok()?;
        if c0.total == 0 || c1.total == 0 || c0.hits * c1.total != c1.hits * c0.total {
            return None;
        }
        counts.push([c0, c1]);
    }
    // Uniform weights cancel in the count-weighted ratio.
    let mixed = |z: usize| {
        let hits: u64 = counts.iter().map(|c: &[RateCounts; 2]| c[z].hits).sum();
        let total: u64 = counts.iter().map(|c| c[z].total).sum();
        (hits, total)
    };
    let ((h0, t0), (h1, t1)) = (mixed(0), mixed(1));
    // gap = (h0 t1 - h1 t0) / (t0 t1)
    let num = h0 as i64 * t1 as i64 - h1 as i64 * t0 as i64;
    let gap = num as f64 / (t0 * t1) as f64;
    (gap.abs() >= MIN_ENSEMBLE_GAP).then_some((counts, gap))
}
