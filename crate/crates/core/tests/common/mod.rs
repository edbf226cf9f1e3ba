//! Independent oracles and random instance generators shared by the
//! integration tests. Nothing here calls the library's metric code.

#![allow(dead_code)]

use fairmix::{Classifier, Dataset, Instance, Label, MetricKind, Sensitive, TableClassifier};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LINEAR: [MetricKind; 3] = [MetricKind::AcceptanceRate, MetricKind::Tpr, MetricKind::Tnr];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Whether instance `(y, z)` belongs to the conditioning set of `kind` in
/// group `g`, and whether prediction `p` counts as a hit there. PPV and NPV
/// condition on the prediction, so membership depends on `p`.
fn cell(kind: MetricKind, y: Label, z: Sensitive, g: Sensitive, p: Label) -> (bool, bool) {
    if z != g {
        return (false, false);
    }
    let pos = p == Label::Positive;
    let ypos = y == Label::Positive;
    match kind {
        MetricKind::AcceptanceRate => (true, pos),
        MetricKind::Tpr => (ypos, pos),
        MetricKind::Tnr => (!ypos, !pos),
        MetricKind::Ppv => (pos, ypos),
        MetricKind::Npv => (!pos, !ypos),
    }
}

/// Exact `(hits, total)` of one prediction vector.
pub fn counts(kind: MetricKind, preds: &[Label], d: &Dataset, g: Sensitive) -> (u64, u64) {
    let mut hits = 0;
    let mut total = 0;
    for (inst, &p) in d.instances().iter().zip(preds) {
        let (member, hit) = cell(kind, inst.label, inst.sensitive, g, p);
        if member {
            total += 1;
            hits += hit as u64;
        }
    }
    (hits, total)
}

/// Rate from exact counts.
pub fn rate(kind: MetricKind, preds: &[Label], d: &Dataset, g: Sensitive) -> Option<f64> {
    let (h, t) = counts(kind, preds, d, g);
    (t > 0).then(|| h as f64 / t as f64)
}

pub fn gap(kind: MetricKind, preds: &[Label], d: &Dataset) -> Option<f64> {
    Some(rate(kind, preds, d, Sensitive::Zero)? - rate(kind, preds, d, Sensitive::One)?)
}

/// Whether the two groups' rates are exactly equal, by cross-multiplication.
pub fn exactly_fair(kind: MetricKind, preds: &[Label], d: &Dataset) -> bool {
    let (h0, t0) = counts(kind, preds, d, Sensitive::Zero);
    let (h1, t1) = counts(kind, preds, d, Sensitive::One);
    t0 > 0 && t1 > 0 && h0 * t1 == h1 * t0
}

pub fn accuracy(preds: &[Label], d: &Dataset) -> f64 {
    let hits = d.instances().iter().zip(preds).filter(|(i, &p)| i.label == p).count();
    hits as f64 / d.len() as f64
}

/// Ensemble rate by enumerating every (member, instance) outcome: the
/// probability-weighted hit mass over the probability-weighted
/// conditioning mass.
pub fn ensemble_rate(kind: MetricKind, preds: &[Vec<Label>], w: &[f64], d: &Dataset, g: Sensitive) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, &wj) in preds.iter().zip(w) {
        for (inst, &pi) in d.instances().iter().zip(p) {
            let (member, hit) = cell(kind, inst.label, inst.sensitive, g, pi);
            if member {
                den += wj;
                if hit {
                    num += wj;
                }
            }
        }
    }
    (den > 0.0).then(|| num / den)
}

pub fn ensemble_gap(kind: MetricKind, preds: &[Vec<Label>], w: &[f64], d: &Dataset) -> Option<f64> {
    Some(ensemble_rate(kind, preds, w, d, Sensitive::Zero)? - ensemble_rate(kind, preds, w, d, Sensitive::One)?)
}

pub fn ensemble_accuracy(preds: &[Vec<Label>], w: &[f64], d: &Dataset) -> f64 {
    preds.iter().zip(w).map(|(p, &wj)| wj * accuracy(p, d)).sum()
}

pub fn random_weights(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // Put the rounding residue on the last weight.
    let head: f64 = w[..m - 1].iter().sum();
    w[m - 1] = 1.0 - head;
    w
}

/// Random dataset of at most 30 instances. Every `(z, y)` cell holds a
/// multiple of `unit` instances (at least one unit), so exact fair rates can
/// be planted with numerator multiples of `1 / unit`.
pub struct Cells {
    pub dataset: Dataset,
    pub unit: usize,
}

pub fn random_cells(rng: &mut ChaCha8Rng) -> Cells {
    let unit = rng.random_range(1..=3);
    let mut instances = Vec::new();
    let mut id = 0.0;
    for z in Sensitive::BOTH {
        for y in [Label::Positive, Label::Negative] {
            let k = rng.random_range(1..=2);
            for _ in 0..unit * k {
                instances.push(Instance::new(vec![id], y, z));
                id += 1.0;
            }
        }
    }
    instances.shuffle(rng);
    Cells { dataset: Dataset::new(instances).unwrap(), unit }
}

/// Prediction vector whose `kind` rate is exactly `t / unit` in both groups;
/// instances outside the conditioning sets get random labels.
pub fn planted_fair(rng: &mut ChaCha8Rng, cells: &Cells, kind: MetricKind) -> Vec<Label> {
    let d = &cells.dataset;
    let t = rng.random_range(0..=cells.unit);
    let mut preds: Vec<Label> = (0..d.len()).map(|_| random_label(rng)).collect();
    for z in Sensitive::BOTH {
        let mut idx: Vec<usize> = (0..d.len())
            .filter(|&i| {
                let inst = &d.instances()[i];
                inst.sensitive == z
                    && match kind {
                        MetricKind::AcceptanceRate => true,
                        MetricKind::Tpr => inst.label == Label::Positive,
                        MetricKind::Tnr => inst.label == Label::Negative,
                        _ => unreachable!("planting is defined for linear kinds"),
                    }
            })
            .collect();
        idx.shuffle(rng);
        let hits = idx.len() / cells.unit * t;
        let (hit, miss) = match kind {
            MetricKind::Tnr => (Label::Negative, Label::Positive),
            _ => (Label::Positive, Label::Negative),
        };
        for (r, &i) in idx.iter().enumerate() {
            preds[i] = if r < hits { hit } else { miss };
        }
    }
    preds
}

pub fn random_label(rng: &mut ChaCha8Rng) -> Label {
    if rng.random::<bool>() {
        Label::Positive
    } else {
        Label::Negative
    }
}

pub fn random_predictions(rng: &mut ChaCha8Rng, n: usize) -> Vec<Label> {
    (0..n).map(|_| random_label(rng)).collect()
}

pub fn tables(preds: &[Vec<Label>], d: &Dataset) -> Vec<Classifier> {
    preds.iter().map(|p| Classifier::from(TableClassifier::new(p.clone(), d).unwrap())).collect()
}

/// All linear rates of every member defined in both groups.
pub fn all_linear_defined(preds: &[Vec<Label>], d: &Dataset) -> bool {
    preds.iter().all(|p| LINEAR.iter().all(|&k| gap(k, p, d).is_some()))
}
