//! Random ensembles: a probability vector over a fixed list of classifiers.
//! Each decision applies one member drawn from that distribution, so the
//! probability of a positive outcome for instance `i` is the total weight of
//! members that accept it.
//!
//! All ensemble metrics here are computed analytically from member counts.
//! [`Ensemble::sample`] exists for validation against those values.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, Label};
use crate::dataset::{CounterfactualPair, Dataset, Sensitive};
use crate::distributional::{dispersion, DispersionReport};
use crate::error::{Error, Result};
use crate::metrics::{self, gap_of, FairnessReport, GroupMetric, MetricKind, Rate, TreatmentSummary};

pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Tolerance for the mixture-of-gaps identity on linear metrics.
pub const CLOSURE_TOLERANCE: f64 = 1e-9;

pub const GENERATOR: &str = "rand_chacha 0.9 ChaCha8Rng, seed_from_u64(seed), stream = draw index";

#[derive(Debug, Clone)]
pub struct Ensemble {
    members: Vec<Classifier>,
    weights: Vec<f64>,
}

/// Per-instance probability of the positive outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenefitProfile {
    pub q: Vec<f64>,
}

impl BenefitProfile {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn group_mean(&self, dataset: &Dataset, z: Sensitive) -> Option<f64> {
        let idx = dataset.group_indices(z);
        (!idx.is_empty()).then(|| idx.iter().map(|&i| self.q[i]).sum::<f64>() / idx.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub kind: MetricKind,
    pub linear: bool,
    pub ensemble_gap: Rate,
    /// `sum_j p_j * gap_j`; undefined if any member gap is undefined.
    pub weighted_member_gap_sum: Rate,
    pub member_gaps: Vec<Rate>,
    /// Only asserted for linear kinds.
    pub identity_holds: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// One member per draw, applied to every instance.
    PerDraw,
    /// Every instance draws its own member.
    PerInstance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    /// 1-based.
    pub draw: usize,
    /// 1-based; absent in per-instance mode.
    pub member_index: Option<usize>,
    pub acceptance_rate_z0: Rate,
    pub acceptance_rate_z1: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRate {
    pub kind: MetricKind,
    pub z: Sensitive,
    pub mean: Rate,
    /// Standard deviation of the per-draw rates over `sqrt(n_draws)`.
    pub standard_error: Rate,
    pub analytic: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub generator: String,
    pub seed: u64,
    pub n_draws: usize,
    pub mode: SamplingMode,
    pub estimates: Vec<EmpiricalRate>,
    #[serde(skip)]
    pub draws: Vec<DrawRecord>,
    /// Row-major `n_draws x N`.
    #[serde(skip)]
    pub labels: Vec<Label>,
    #[serde(skip)]
    n_instances: usize,
}

impl SampleReport {
    pub fn label(&self, draw: usize, instance: usize) -> Label {
        self.labels[draw * self.n_instances + instance]
    }

    pub fn draw_labels(&self, draw: usize) -> &[Label] {
        &self.labels[draw * self.n_instances..(draw + 1) * self.n_instances]
    }

    pub fn estimate(&self, kind: MetricKind, z: Sensitive) -> Option<&EmpiricalRate> {
        self.estimates.iter().find(|e| e.kind == kind && e.z == z)
    }

    /// `draw,member_index,acceptance_rate_z0,acceptance_rate_z1`.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["draw", "member_index", "acceptance_rate_z0", "acceptance_rate_z1"])?;
        let fmt = |r: Rate| r.map(crate::json::format_float).unwrap_or_default();
        for d in &self.draws {
            wtr.write_record([
                d.draw.to_string(),
                d.member_index.map(|m| m.to_string()).unwrap_or_default(),
                fmt(d.acceptance_rate_z0),
                fmt(d.acceptance_rate_z1),
            ])?;
        }
        wtr.flush()
    }
}

impl Ensemble {
    pub fn new(members: Vec<Classifier>, weights: Vec<f64>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidWeights("ensemble needs at least one member".into()));
        }
        if members.len() != weights.len() {
            return Err(Error::InvalidWeights(format!(
                "{} members but {} weights",
                members.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidWeights(format!("weight {w} is not a probability")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { members, weights })
    }

    pub fn uniform(members: Vec<Classifier>) -> Result<Self> {
        let m = members.len().max(1);
        Self::new(members, vec![1.0 / m as f64; m])
    }

    pub fn single(member: Classifier) -> Self {
        Self {
            members: vec![member],
            weights: vec![1.0],
        }
    }

    pub fn members(&self) -> &[Classifier] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member_predictions(&self, dataset: &Dataset) -> Result<Vec<Vec<Label>>> {
        self.members.iter().map(|c| c.predict_all(dataset)).collect()
    }

    pub fn acceptance_probability(&self, dataset: &Dataset) -> Result<BenefitProfile> {
        let preds = self.member_predictions(dataset)?;
        Ok(profile_from(&preds, &self.weights, dataset.len()))
    }

    /// Acceptance probability for each instance with its `z` flipped.
    pub fn flipped_acceptance_probability(&self, dataset: &Dataset) -> Result<BenefitProfile> {
        let preds = self
            .members
            .iter()
            .map(|c| (0..dataset.len()).map(|i| c.predict_flipped(dataset, i)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(profile_from(&preds, &self.weights, dataset.len()))
    }

    pub fn group_rate(&self, kind: MetricKind, dataset: &Dataset, z: Sensitive) -> Result<Rate> {
        let preds = self.member_predictions(dataset)?;
        mixture_group_rate(kind, &preds, &self.weights, dataset, z)
    }

    pub fn group_metric(&self, kind: MetricKind, dataset: &Dataset) -> Result<GroupMetric> {
        let preds = self.member_predictions(dataset)?;
        Ok(GroupMetric::new(
            kind,
            mixture_group_rate(kind, &preds, &self.weights, dataset, Sensitive::Zero)?,
            mixture_group_rate(kind, &preds, &self.weights, dataset, Sensitive::One)?,
        ))
    }

    pub fn gap(&self, kind: MetricKind, dataset: &Dataset) -> Result<Rate> {
        Ok(self.group_metric(kind, dataset)?.gap)
    }

    /// `sum_j p_j * accuracy(C_j)`.
    pub fn accuracy(&self, dataset: &Dataset) -> Result<f64> {
        let mut acc = 0.0;
        for (c, &p) in self.members.iter().zip(&self.weights) {
            acc += p * metrics::accuracy(&c.predict_all(dataset)?, dataset)?;
        }
        Ok(acc)
    }

    pub fn closure_check(&self, kind: MetricKind, dataset: &Dataset) -> Result<ClosureReport> {
        let preds = self.member_predictions(dataset)?;
        let ensemble_gap = gap_of(
            mixture_group_rate(kind, &preds, &self.weights, dataset, Sensitive::Zero)?,
            mixture_group_rate(kind, &preds, &self.weights, dataset, Sensitive::One)?,
        );
        let member_gaps = preds
            .iter()
            .map(|p| metrics::fairness_gap(kind, p, dataset))
            .collect::<Result<Vec<_>>>()?;
        let weighted_member_gap_sum = member_gaps
            .iter()
            .zip(&self.weights)
            .try_fold(0.0, |acc, (g, &p)| g.map(|g| acc + p * g));
        let identity_holds = if kind.is_linear() {
            match (ensemble_gap, weighted_member_gap_sum) {
                (Some(e), Some(w)) => Some((e - w).abs() <= CLOSURE_TOLERANCE),
                (None, None) => Some(true),
                _ => Some(false),
            }
        } else {
            None
        };
        Ok(ClosureReport {
            kind,
            linear: kind.is_linear(),
            ensemble_gap,
            weighted_member_gap_sum,
            member_gaps,
            identity_holds,
        })
    }

    /// Counterfactual pairs whose acceptance probabilities differ by more
    /// than `tolerance`.
    pub fn treatment_violations(
        &self,
        dataset: &Dataset,
        pairs: &[CounterfactualPair],
        tolerance: f64,
    ) -> Result<Vec<CounterfactualPair>> {
        let profile = self.acceptance_probability(dataset)?;
        Ok(pairs_violating(&profile, pairs, tolerance))
    }

    /// Instances whose acceptance probability moves by more than `tolerance`
    /// when `z` alone is flipped. Fails if any member is a prediction table.
    pub fn flip_violations(&self, dataset: &Dataset, tolerance: f64) -> Result<Vec<usize>> {
        let base = self.acceptance_probability(dataset)?;
        let flipped = self.flipped_acceptance_probability(dataset)?;
        Ok(base
            .q
            .iter()
            .zip(&flipped.q)
            .enumerate()
            .filter(|(_, (a, b))| (*a - *b).abs() > tolerance)
            .map(|(i, _)| i)
            .collect())
    }

    pub fn audit(&self, dataset: &Dataset, tolerance: f64) -> Result<FairnessReport> {
        let metrics = MetricKind::ALL
            .iter()
            .map(|&k| self.group_metric(k, dataset))
            .collect::<Result<Vec<_>>>()?;
        let profile = self.acceptance_probability(dataset)?;
        let pairs = dataset.counterfactual_pairs();
        let violating = pairs_violating(&profile, &pairs, tolerance);
        let flips = if self.members.iter().all(Classifier::supports_counterfactuals) {
            Some(self.flip_violations(dataset, tolerance)?)
        } else {
            None
        };
        let mut report = FairnessReport::new(
            self.accuracy(dataset)?,
            &metrics,
            TreatmentSummary::new(pairs.len(), &violating, flips),
            tolerance,
        );
        report.distributional = Some(dispersion(&profile, dataset)?);
        Ok(report)
    }

    pub fn dispersion(&self, dataset: &Dataset) -> Result<DispersionReport> {
        dispersion(&self.acceptance_probability(dataset)?, dataset)
    }

    /// Inverse-CDF member selection for a uniform draw `u` in `[0, 1)`.
    pub fn select_member(&self, u: f64) -> usize {
        let mut cumulative = 0.0;
        let mut last_positive = 0;
        for (j, &p) in self.weights.iter().enumerate() {
            if p > 0.0 {
                last_positive = j;
                cumulative += p;
                if u < cumulative {
                    return j;
                }
            }
        }
        last_positive
    }

    /// Monte Carlo realization of the ensemble. Draw `d` uses its own
    /// ChaCha stream, so the output depends only on `(seed, n_draws, mode)`.
    pub fn sample(&self, dataset: &Dataset, n_draws: usize, seed: u64, mode: SamplingMode) -> Result<SampleReport> {
        if n_draws == 0 {
            return Err(Error::InvalidArgument("n_draws must be at least 1".into()));
        }
        let preds = self.member_predictions(dataset)?;
        let n = dataset.len();
        let groups = Sensitive::BOTH.map(|z| dataset.group_indices(z));

        let rows: Vec<(Option<usize>, Vec<Label>)> = (0..n_draws)
            .into_par_iter()
            .map(|d| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(d as u64);
                match mode {
                    SamplingMode::PerDraw => {
                        let j = self.select_member(rng.random::<f64>());
                        (Some(j), preds[j].clone())
                    }
                    SamplingMode::PerInstance => {
                        let labels = (0..n).map(|i| preds[self.select_member(rng.random::<f64>())][i]).collect();
                        (None, labels)
                    }
                }
            })
            .collect();

        let mut labels = Vec::with_capacity(n_draws * n);
        let mut draws = Vec::with_capacity(n_draws);
        for (d, (member, row)) in rows.into_iter().enumerate() {
            let rate = |z: usize| {
                let idx = &groups[z];
                (!idx.is_empty())
                    .then(|| idx.iter().filter(|&&i| row[i].is_positive()).count() as f64 / idx.len() as f64)
            };
            draws.push(DrawRecord {
                draw: d + 1,
                member_index: member.map(|j| j + 1),
                acceptance_rate_z0: rate(0),
                acceptance_rate_z1: rate(1),
            });
            labels.extend(row);
        }

        let mut estimates = Vec::new();
        for kind in MetricKind::LINEAR {
            for z in Sensitive::BOTH {
                let per_draw = (0..n_draws)
                    .map(|d| metrics::group_rate(kind, &labels[d * n..(d + 1) * n], dataset, z))
                    .collect::<Result<Vec<_>>>()?;
                let values: Option<Vec<f64>> = per_draw.into_iter().collect();
                let (mean, standard_error) = match values {
                    Some(v) => {
                        let (m, se) = mean_and_standard_error(&v);
                        (Some(m), Some(se))
                    }
                    None => (None, None),
                };
                estimates.push(EmpiricalRate {
                    kind,
                    z,
                    mean,
                    standard_error,
                    analytic: mixture_group_rate(kind, &preds, &self.weights, dataset, z)?,
                });
            }
        }

        Ok(SampleReport {
            generator: GENERATOR.to_string(),
            seed,
            n_draws,
            mode,
            estimates,
            draws,
            labels,
            n_instances: n,
        })
    }
}

fn mean_and_standard_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.iter().all(|&v| v == values[0]) {
        return (values[0], 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn profile_from(preds: &[Vec<Label>], weights: &[f64], n: usize) -> BenefitProfile {
    let mut q = vec![0.0; n];
    for (labels, &p) in preds.iter().zip(weights) {
        for (qi, l) in q.iter_mut().zip(labels) {
            if l.is_positive() {
                *qi += p;
            }
        }
    }
    // Accumulated weights can overshoot 1 by an ulp.
    for qi in &mut q {
        *qi = qi.clamp(0.0, 1.0);
    }
    BenefitProfile { q }
}

fn pairs_violating(profile: &BenefitProfile, pairs: &[CounterfactualPair], tolerance: f64) -> Vec<CounterfactualPair> {
    pairs
        .iter()
        .copied()
        .filter(|p| (profile.q[p.left] - profile.q[p.right]).abs() > tolerance)
        .collect()
}

/// Group rate of a mixture given member prediction vectors. Linear kinds mix
/// member rates; PPV and NPV use the ratio of expected counts.
pub fn mixture_group_rate(
    kind: MetricKind,
    member_predictions: &[Vec<Label>],
    weights: &[f64],
    dataset: &Dataset,
    z: Sensitive,
) -> Result<Rate> {
    let mut hits = 0.0;
    let mut total = 0.0;
    let mut mixed = 0.0;
    for (preds, &p) in member_predictions.iter().zip(weights) {
        let counts = metrics::rate_counts(kind, preds, dataset, z)?;
        if kind.is_linear() {
            match counts.rate() {
                Some(r) => mixed += p * r,
                None => return Ok(None),
            }
        } else {
            hits += p * counts.hits as f64;
            total += p * counts.total as f64;
        }
    }
    if kind.is_linear() {
        Ok(Some(mixed))
    } else {
        Ok((total > 0.0).then(|| hits / total))
    }
}

/// On-disk form `{"weights": [p_1, ..., p_M]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub weights: Vec<f64>,
}

impl WeightsFile {
    /// Sums within 1e-9 of one are renormalized, so weights written with
    /// rounded decimals load back as a valid distribution.
    pub fn parse(text: &str) -> Result<Vec<f64>> {
        let file: WeightsFile = serde_json::from_str(text)?;
        let total: f64 = file.weights.iter().sum();
        if file.weights.iter().all(|w| w.is_finite() && *w >= 0.0) && (total - 1.0).abs() <= 1e-9 && total > 0.0 {
            Ok(file.weights.iter().map(|w| w / total).collect())
        } else {
            Ok(file.weights)
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Vec<f64>> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_json(weights: &[f64]) -> String {
        serde_json::to_string_pretty(&WeightsFile {
            weights: weights.to_vec(),
        })
        .expect("weights serialize")
    }
}
