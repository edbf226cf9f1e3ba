//! The four reference scenarios. Each bundles a small dataset, its member
//! classifiers, prescribed mixture weights and the exact values the
//! scenario is built to exhibit. Men are coded `z = 0`, women `z = 1`.
//!
//! Cluster sizes are the smallest integer counts that realize the stated
//! rates exactly; coordinates beyond that are arbitrary.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::{save_prediction_matrix, Classifier, Label, LinearClassifier};
use crate::dataset::{Dataset, Instance, Sensitive};
use crate::distributional::compare_dispersion;
use crate::ensemble::{Ensemble, WeightsFile};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricKind};
use crate::optimizer::{best_fair_single_threshold, solve_fair_mixture, Objective};

const MEN: Sensitive = Sensitive::Zero;
const WOMEN: Sensitive = Sensitive::One;

/// Absolute tolerance for the self-test; every expectation is exact.
pub const SELF_TEST_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub dataset: Dataset,
    pub members: Vec<Classifier>,
    pub prescribed_weights: Vec<f64>,
    /// Classifiers shown alongside the members but not mixed.
    pub reference: Vec<(String, Classifier)>,
    pub expectations: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationCheck {
    pub name: String,
    pub expected: f64,
    pub actual: Option<f64>,
    pub pass: bool,
}

impl Scenario {
    pub fn by_number(n: u8) -> Result<Scenario> {
        match n {
            1 => Ok(figure1()),
            2 => Ok(figure2()),
            3 => Ok(figure3()),
            4 => Ok(figure4()),
            _ => Err(Error::InvalidArgument(format!("no figure {n}; expected 1 to 4"))),
        }
    }

    pub fn by_name(name: &str) -> Result<Scenario> {
        let n = name
            .trim_start_matches("figure")
            .trim_start_matches("fig")
            .parse::<u8>()
            .map_err(|_| Error::InvalidArgument(format!("unknown scenario {name:?}")))?;
        Self::by_number(n)
    }

    pub fn ensemble(&self) -> Ensemble {
        Ensemble::new(self.members.clone(), self.prescribed_weights.clone()).expect("scenario weights are valid")
    }

    /// Recomputes every expectation through the library.
    pub fn measure(&self) -> Result<BTreeMap<String, Option<f64>>> {
        let mut out = BTreeMap::new();
        let d = &self.dataset;
        let ens = self.ensemble();
        let mut put = |k: String, v: Option<f64>| {
            out.insert(k, v);
        };

        let named: Vec<(String, &Classifier)> = self
            .members
            .iter()
            .enumerate()
            .map(|(j, c)| (format!("c{}", j + 1), c))
            .chain(self.reference.iter().map(|(n, c)| (n.to_lowercase().replace('_', ""), c)))
            .collect();
        for (name, c) in &named {
            let p = c.predict_all(d)?;
            put(format!("{name}_accuracy"), Some(metrics::accuracy(&p, d)?));
            put(format!("{name}_acceptance_z0"), metrics::group_rate(MetricKind::AcceptanceRate, &p, d, MEN)?);
            put(format!("{name}_acceptance_z1"), metrics::group_rate(MetricKind::AcceptanceRate, &p, d, WOMEN)?);
            put(format!("{name}_acceptance_gap"), metrics::fairness_gap(MetricKind::AcceptanceRate, &p, d)?);
            if c.supports_counterfactuals() {
                let flips = metrics::flip_violations(c, d)?;
                put(format!("{name}_flip_violation_fraction"), Some(flips.len() as f64 / d.len() as f64));
            }
        }

        put("ensemble_accuracy".into(), Some(ens.accuracy(d)?));
        let ar = ens.group_metric(MetricKind::AcceptanceRate, d)?;
        put("ensemble_acceptance_z0".into(), ar.value_z0);
        put("ensemble_acceptance_z1".into(), ar.value_z1);
        put("ensemble_acceptance_gap".into(), ar.gap);
        let q = ens.acceptance_probability(d)?.q;
        for z in Sensitive::BOTH {
            let vals: Vec<f64> = d.group_indices(z).into_iter().map(|i| q[i]).collect();
            put(format!("ensemble_q_min_z{z}"), vals.iter().cloned().reduce(f64::min));
            put(format!("ensemble_q_max_z{z}"), vals.iter().cloned().reduce(f64::max));
        }
        if ens.members().iter().all(Classifier::supports_counterfactuals) {
            let flips = ens.flip_violations(d, metrics::DEFAULT_TOLERANCE)?;
            put("ensemble_flip_violation_fraction".into(), Some(flips.len() as f64 / d.len() as f64));
        }
        let disp = ens.dispersion(d)?;
        for g in &disp.groups {
            put(format!("ensemble_variance_z{}", g.z), g.variance_q);
            put(format!("ensemble_gini_z{}", g.z), g.gini_q);
            put(format!("ensemble_determinism_z{}", g.z), g.determinism_index);
        }

        match self.name.as_str() {
            "figure2" => {
                let sol = solve_fair_mixture(&self.members, d, &[MetricKind::AcceptanceRate], 0.0, Objective::FeasibilityOnly)?;
                put("feasibility_weight_c1".into(), sol.weights.first().copied());
            }
            "figure3" => {
                let best = best_fair_single_threshold(d, 0, metrics::DEFAULT_TOLERANCE)?;
                put("best_fair_single_threshold_accuracy".into(), Some(best.accuracy));
                let sol = solve_fair_mixture(&self.members, d, &[MetricKind::AcceptanceRate], 0.0, Objective::MaxAccuracy)?;
                put("optimal_fair_mixture_accuracy".into(), sol.accuracy);
            }
            "figure4" => {
                let single = Ensemble::single(self.members[0].clone());
                let cmp = compare_dispersion(&ens, &single, d)?;
                for delta in &cmp.deltas {
                    put(format!("variance_delta_vs_c1_z{}", delta.z), delta.variance_q);
                }
            }
            _ => {}
        }
        Ok(out)
    }

    pub fn self_test(&self) -> Result<Vec<ExpectationCheck>> {
        let measured = self.measure()?;
        Ok(self
            .expectations
            .iter()
            .map(|(name, &expected)| {
                let actual = measured.get(name).copied().flatten();
                ExpectationCheck {
                    name: name.clone(),
                    expected,
                    actual,
                    pass: actual.is_some_and(|a| (a - expected).abs() <= SELF_TEST_TOLERANCE),
                }
            })
            .collect())
    }

    /// Writes `dataset.csv`, `predictions.csv`, `weights.json`,
    /// `expectations.json` and, when present, `reference_predictions.csv`.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.dataset.save_csv(dir.join("dataset.csv"))?;
        save_prediction_matrix(dir.join("predictions.csv"), &self.members, &self.dataset)?;
        let write = |name: &str, text: String| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(path, e))
        };
        write("weights.json", WeightsFile::to_json(&self.prescribed_weights))?;
        write("expectations.json", crate::json::to_string(&self.expectations)?)?;
        if !self.reference.is_empty() {
            let refs: Vec<Classifier> = self.reference.iter().map(|(_, c)| c.clone()).collect();
            save_prediction_matrix(dir.join("reference_predictions.csv"), &refs, &self.dataset)?;
        }
        Ok(())
    }
}

fn expectations(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn linear(weights: &[f64], sensitive_weight: f64, bias: f64) -> Classifier {
    Classifier::from(LinearClassifier::new(weights.to_vec(), sensitive_weight, bias))
}

fn build(points: &[(&[f64], i8, Sensitive)]) -> Dataset {
    Dataset::new(
        points
            .iter()
            .map(|&(f, y, z)| Instance::new(f.to_vec(), Label::try_from(y).expect("label"), z))
            .collect(),
    )
    .expect("scenario dataset is valid")
}

/// Gender is the only feature: `f_1` mirrors `z`. `C_1` accepts exactly the
/// women, `C_2` exactly the men; both read gender through the sensitive
/// weight. Since `f_1` differs between any man and any woman there are no
/// in-dataset counterfactual pairs, so equality of treatment is tested by
/// flipping `z` on each instance.
pub fn figure1() -> Scenario {
    let mut points = Vec::new();
    for y in [1i8, -1, 1, -1] {
        points.push((vec![0.0], y, MEN));
        points.push((vec![1.0], y, WOMEN));
    }
    let refs: Vec<(&[f64], i8, Sensitive)> = points.iter().map(|(f, y, z)| (f.as_slice(), *y, *z)).collect();
    Scenario {
        name: "figure1".into(),
        description: "Two gender-only classifiers (women-only, men-only); their uniform mixture treats every user identically".into(),
        dataset: build(&refs),
        members: vec![linear(&[0.0], 1.0, -0.5), linear(&[0.0], -1.0, 0.5)],
        prescribed_weights: vec![0.5, 0.5],
        reference: Vec::new(),
        expectations: expectations(&[
            ("c1_acceptance_z0", 0.0),
            ("c1_acceptance_z1", 1.0),
            ("c2_acceptance_z0", 1.0),
            ("c2_acceptance_z1", 0.0),
            ("c1_flip_violation_fraction", 1.0),
            ("c2_flip_violation_fraction", 1.0),
            ("ensemble_flip_violation_fraction", 0.0),
            ("ensemble_q_min_z0", 0.5),
            ("ensemble_q_max_z0", 0.5),
            ("ensemble_q_min_z1", 0.5),
            ("ensemble_q_max_z1", 0.5),
            ("ensemble_acceptance_gap", 0.0),
        ]),
    }
}

/// Nine men and nine women over four quadrants of `(f_1, f_2)`; gender is not
/// a feature. Women: six in the top-left quadrant, three bottom-left. Men:
/// three top-right, six bottom-right. Top quadrants are the positive class.
/// `C_1` accepts the top-left quadrant (women 6/9, men 0), `C_2` the top-right
/// (women 0, men 3/9), and the reference `C_3` accepts the two points with
/// `f_2 = 2` in each top quadrant (2/9 for both groups).
pub fn figure2() -> Scenario {
    let women_tl: [[f64; 2]; 6] = [[-1.0, 1.0], [-1.5, 1.0], [-2.0, 1.0], [-1.0, 1.5], [-1.5, 2.0], [-2.0, 2.0]];
    let women_bl: [[f64; 2]; 3] = [[-1.0, -1.0], [-1.5, -1.5], [-2.0, -2.0]];
    let men_tr: [[f64; 2]; 3] = [[1.0, 1.0], [1.5, 2.0], [2.0, 2.0]];
    let men_br: [[f64; 2]; 6] = [[1.0, -1.0], [1.5, -1.0], [2.0, -1.0], [1.0, -2.0], [1.5, -2.0], [2.0, -2.0]];
    let mut points: Vec<(&[f64], i8, Sensitive)> = Vec::new();
    points.extend(women_tl.iter().map(|p| (p.as_slice(), 1, WOMEN)));
    points.extend(women_bl.iter().map(|p| (p.as_slice(), -1, WOMEN)));
    points.extend(men_tr.iter().map(|p| (p.as_slice(), 1, MEN)));
    points.extend(men_br.iter().map(|p| (p.as_slice(), -1, MEN)));
    Scenario {
        name: "figure2".into(),
        description: "Two impact-unfair classifiers mixed 1/3 : 2/3 give both groups acceptance rate 2/9".into(),
        dataset: build(&points),
        members: vec![
            Classifier::from(LinearClassifier::blind(vec![-1.0, 1.0], -1.5)),
            Classifier::from(LinearClassifier::blind(vec![1.0, 1.0], -1.5)),
        ],
        prescribed_weights: vec![1.0 / 3.0, 2.0 / 3.0],
        reference: vec![("C_3".into(), Classifier::from(LinearClassifier::blind(vec![0.0, 1.0], -1.9)))],
        expectations: expectations(&[
            ("c1_acceptance_z0", 0.0),
            ("c1_acceptance_z1", 2.0 / 3.0),
            ("c1_acceptance_gap", -2.0 / 3.0),
            ("c2_acceptance_z0", 1.0 / 3.0),
            ("c2_acceptance_z1", 0.0),
            ("c2_acceptance_gap", 1.0 / 3.0),
            ("c3_acceptance_z0", 2.0 / 9.0),
            ("c3_acceptance_z1", 2.0 / 9.0),
            ("c3_acceptance_gap", 0.0),
            ("ensemble_acceptance_z0", 2.0 / 9.0),
            ("ensemble_acceptance_z1", 2.0 / 9.0),
            ("ensemble_acceptance_gap", 0.0),
            ("feasibility_weight_c1", 1.0 / 3.0),
        ]),
    }
}

/// Four equal clusters on `f_1`: men positive at 1, men negative at 0, women
/// positive at 0, women negative at 1. `C_1` accepts men with `f_1 >= 0.5`,
/// `C_2` accepts women with `f_1 <= 0.5`. Neither rule can be written as a
/// threshold on `f_1` alone, so both use the sensitive weight.
pub fn figure3() -> Scenario {
    let mut points: Vec<(&[f64], i8, Sensitive)> = Vec::new();
    for _ in 0..2 {
        points.push((&[1.0], 1, MEN));
        points.push((&[0.0], -1, MEN));
        points.push((&[0.0], 1, WOMEN));
        points.push((&[1.0], -1, WOMEN));
    }
    Scenario {
        name: "figure3".into(),
        description: "Uniform mixture of two accurate but unfair classifiers is fair with accuracy 0.75; the best fair single threshold reaches 0.5".into(),
        dataset: build(&points),
        members: vec![linear(&[1.0], -2.0, -0.5), linear(&[-1.0], 2.0, -1.5)],
        prescribed_weights: vec![0.5, 0.5],
        reference: Vec::new(),
        expectations: expectations(&[
            ("c1_accuracy", 0.75),
            ("c2_accuracy", 0.75),
            ("c1_acceptance_z0", 0.5),
            ("c1_acceptance_z1", 0.0),
            ("c2_acceptance_z0", 0.0),
            ("c2_acceptance_z1", 0.5),
            ("ensemble_accuracy", 0.75),
            ("ensemble_acceptance_z0", 0.25),
            ("ensemble_acceptance_z1", 0.25),
            ("ensemble_acceptance_gap", 0.0),
            ("best_fair_single_threshold_accuracy", 0.5),
            ("optimal_fair_mixture_accuracy", 0.75),
        ]),
    }
}

/// Men sit in the top-right and bottom-left quadrants, women in the top-left
/// and bottom-right, two per quadrant. `C_1` accepts `f_2 >= 0`, `C_2`
/// accepts `f_1 >= 0`: both accept the same top-right men and different
/// halves of the women.
pub fn figure4() -> Scenario {
    let points: Vec<(&[f64], i8, Sensitive)> = vec![
        (&[1.0, 1.0], 1, MEN),
        (&[2.0, 1.5], 1, MEN),
        (&[-1.0, -1.0], -1, MEN),
        (&[-2.0, -1.5], -1, MEN),
        (&[-1.0, 1.0], 1, WOMEN),
        (&[-2.0, 1.5], 1, WOMEN),
        (&[1.0, -1.0], -1, WOMEN),
        (&[2.0, -1.5], -1, WOMEN),
    ];
    Scenario {
        name: "figure4".into(),
        description: "Impact-fair members and mixture; the mixture gives every woman probability 0.5 while men's outcomes stay fixed".into(),
        dataset: build(&points),
        members: vec![
            Classifier::from(LinearClassifier::blind(vec![0.0, 1.0], 0.0)),
            Classifier::from(LinearClassifier::blind(vec![1.0, 0.0], 0.0)),
        ],
        prescribed_weights: vec![0.5, 0.5],
        reference: Vec::new(),
        expectations: expectations(&[
            ("c1_acceptance_gap", 0.0),
            ("c2_acceptance_gap", 0.0),
            ("ensemble_acceptance_z0", 0.5),
            ("ensemble_acceptance_z1", 0.5),
            ("ensemble_acceptance_gap", 0.0),
            ("ensemble_q_min_z1", 0.5),
            ("ensemble_q_max_z1", 0.5),
            ("ensemble_variance_z1", 0.0),
            ("ensemble_gini_z1", 0.0),
            ("ensemble_determinism_z1", 0.0),
            ("ensemble_variance_z0", 0.25),
            ("ensemble_gini_z0", 0.5),
            ("ensemble_determinism_z0", 1.0),
            ("variance_delta_vs_c1_z1", -0.25),
            ("variance_delta_vs_c1_z0", 0.0),
        ]),
    }
}

pub fn all() -> Vec<Scenario> {
    vec![figure1(), figure2(), figure3(), figure4()]
}
