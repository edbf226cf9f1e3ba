//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always printed.

mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use fairmix::classifiers::load_prediction_matrix;
use fairmix::cli::oracle_check;
use fairmix::ensemble::SamplingMode;
use fairmix::metrics::flip_violations;
use fairmix::optimizer::{best_fair_single_threshold, ppv_counterexample_search, solve_fair_mixture, Objective};
use fairmix::{Classifier, Dataset, Ensemble, MetricKind, Scenario, Sensitive, SolveStatus};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn member_preds(members: &[Classifier], d: &Dataset) -> Vec<Vec<fairmix::Label>> {
    members.iter().map(|c| c.predict_all(d).unwrap()).collect()
}

fn figure2() -> Outcome {
    let s = Scenario::by_number(2).map_err(|e| e.to_string())?;
    ensure(s.prescribed_weights == [1.0 / 3.0, 2.0 / 3.0], || "unexpected weights".into())?;
    let ens = s.ensemble();
    let preds = member_preds(&s.members, &s.dataset);
    let mut rates = Vec::new();
    for z in Sensitive::BOTH {
        let lib = ens.group_rate(MetricKind::AcceptanceRate, &s.dataset, z).unwrap().unwrap();
        let oracle = ensemble_rate(MetricKind::AcceptanceRate, &preds, ens.weights(), &s.dataset, z).unwrap();
        ensure((lib - 2.0 / 9.0).abs() < 1e-12, || format!("z={} rate {lib}", z.as_u8()))?;
        ensure((lib - oracle).abs() < 1e-12, || format!("library {lib} vs oracle {oracle}"))?;
        rates.push(lib);
    }
    let gap = ens.gap(MetricKind::AcceptanceRate, &s.dataset).unwrap().unwrap();
    ensure(gap.abs() < 1e-12, || format!("gap {gap}"))?;
    Ok(format!("acceptance rates {:.12} / {:.12}, |gap| = {:.1e}", rates[0], rates[1], gap.abs()))
}

fn figure3() -> Outcome {
    let s = Scenario::by_number(3).map_err(|e| e.to_string())?;
    let ens = s.ensemble();
    ensure(ens.weights() == [0.5, 0.5], || "unexpected weights".into())?;
    let preds = member_preds(&s.members, &s.dataset);
    let acc = ens.accuracy(&s.dataset).unwrap();
    ensure(acc == 0.75, || format!("accuracy {acc}"))?;
    ensure(ensemble_accuracy(&preds, ens.weights(), &s.dataset) == 0.75, || "oracle accuracy".into())?;
    for z in Sensitive::BOTH {
        let r = ens.group_rate(MetricKind::AcceptanceRate, &s.dataset, z).unwrap().unwrap();
        ensure(r == 0.25, || format!("z={} positive rate {r}", z.as_u8()))?;
    }
    let sweep = best_fair_single_threshold(&s.dataset, 0, 1e-9).map_err(|e| e.to_string())?;
    ensure(sweep.accuracy == 0.5, || format!("sweep accuracy {}", sweep.accuracy))?;
    let naive = naive_threshold_best(&s.dataset, 1e-9);
    ensure(naive == 0.5, || format!("naive sweep {naive}"))?;
    Ok(format!(
        "ensemble accuracy {acc}, positive rates 0.25 / 0.25, best fair threshold accuracy {} ({} candidates)",
        sweep.accuracy, sweep.candidates_examined
    ))
}

/// Every threshold rule `accept f >= v`, `accept f <= v` on observed values,
/// plus accept-all and accept-none.
fn naive_threshold_best(d: &Dataset, tol: f64) -> f64 {
    use fairmix::Label::*;
    let values: Vec<f64> = d.instances().iter().map(|i| i.features[0]).collect();
    let mut rules: Vec<Vec<fairmix::Label>> = vec![vec![Positive; d.len()], vec![Negative; d.len()]];
    for &v in &values {
        rules.push(values.iter().map(|&f| if f >= v { Positive } else { Negative }).collect());
        rules.push(values.iter().map(|&f| if f <= v { Positive } else { Negative }).collect());
    }
    rules
        .iter()
        .filter(|p| gap(MetricKind::AcceptanceRate, p, d).is_some_and(|g| g.abs() <= tol))
        .map(|p| accuracy(p, d))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn figure1() -> Outcome {
    let s = Scenario::by_number(1).map_err(|e| e.to_string())?;
    let n = s.dataset.len();
    for (j, c) in s.members.iter().enumerate() {
        let v = flip_violations(c, &s.dataset).map_err(|e| e.to_string())?;
        ensure(v.len() == n, || format!("C{} violates {}/{n}", j + 1, v.len()))?;
    }
    let ens = s.ensemble();
    let v = ens.flip_violations(&s.dataset, 1e-12).map_err(|e| e.to_string())?;
    ensure(v.is_empty(), || format!("ensemble violates {}", v.len()))?;
    let q = ens.acceptance_probability(&s.dataset).unwrap().q;
    ensure(q.iter().all(|&x| x == 0.5), || format!("q = {q:?}"))?;
    let qf = ens.flipped_acceptance_probability(&s.dataset).unwrap().q;
    ensure(qf.iter().all(|&x| x == 0.5), || format!("flipped q = {qf:?}"))?;
    Ok(format!("members violate {n}/{n} flip pairs each, ensemble 0/{n}, q = 0.5 everywhere"))
}

fn figure4() -> Outcome {
    let s = Scenario::by_number(4).map_err(|e| e.to_string())?;
    let preds = member_preds(&s.members, &s.dataset);
    for (j, p) in preds.iter().enumerate() {
        ensure(exactly_fair(MetricKind::AcceptanceRate, p, &s.dataset), || format!("C{} unfair", j + 1))?;
    }
    let ens = s.ensemble();
    let g = ens.gap(MetricKind::AcceptanceRate, &s.dataset).unwrap().unwrap();
    ensure(g == 0.0, || format!("ensemble gap {g}"))?;
    let rep = ens.dispersion(&s.dataset).unwrap();
    let women = rep.group(Sensitive::One);
    let men = rep.group(Sensitive::Zero);
    let q = ens.acceptance_probability(&s.dataset).unwrap().q;
    let women_q: Vec<f64> = s.dataset.group_indices(Sensitive::One).iter().map(|&i| q[i]).collect();
    ensure(women_q.iter().all(|&x| x == 0.5), || format!("women q = {women_q:?}"))?;
    ensure(women.variance_q == Some(0.0), || format!("women variance {:?}", women.variance_q))?;
    ensure(women.determinism_index == Some(0.0), || format!("women determinism {:?}", women.determinism_index))?;
    ensure(men.determinism_index == Some(1.0), || format!("men determinism {:?}", men.determinism_index))?;
    ensure(men.variance_q == Some(0.25), || format!("men variance {:?}", men.variance_q))?;
    Ok("all gaps 0; women q = 0.5 (variance 0, determinism 0); men determinism 1 (variance 0.25)".into())
}

fn closure() -> Outcome {
    let mut rng = rng(0x5eed_c105);
    let instances = 1200;
    let mut worst_fair = 0.0f64;
    let mut worst_identity = 0.0f64;
    for case in 0..instances {
        let cells = random_cells(&mut rng);
        let d = &cells.dataset;
        let kind = LINEAR[case % 3];
        let m = rng.random_range(1..=5);
        let w = random_weights(&mut rng, m);

        let fair: Vec<_> = (0..m).map(|_| planted_fair(&mut rng, &cells, kind)).collect();
        for p in &fair {
            ensure(exactly_fair(kind, p, d), || format!("case {case}: planting failed"))?;
        }
        let ens = Ensemble::new(tables(&fair, d), w.clone()).map_err(|e| e.to_string())?;
        let g = ens.gap(kind, d).unwrap().unwrap();
        worst_fair = worst_fair.max(g.abs());
        ensure(g.abs() <= 1e-9, || format!("case {case}: {kind} gap {g} of fair members"))?;

        let arbitrary: Vec<_> = (0..m).map(|_| random_predictions(&mut rng, d.len())).collect();
        let ens = Ensemble::new(tables(&arbitrary, d), w.clone()).map_err(|e| e.to_string())?;
        for k in LINEAR {
            let rep = ens.closure_check(k, d).map_err(|e| e.to_string())?;
            let weighted: f64 = arbitrary.iter().zip(&w).map(|(p, wj)| wj * gap(k, p, d).unwrap()).sum();
            let eg = rep.ensemble_gap.unwrap();
            let diff = (eg - weighted).abs();
            worst_identity = worst_identity.max(diff);
            ensure(rep.linear && rep.identity_holds == Some(true), || format!("case {case}: {k} report {rep:?}"))?;
            ensure(diff <= 1e-9, || format!("case {case}: {k} ensemble gap {eg} vs weighted sum {weighted}"))?;
        }
    }
    Ok(format!(
        "{instances} instances; max |gap| of fair-member ensembles {worst_fair:.1e}, max identity error {worst_identity:.1e}"
    ))
}

fn witness_fixture() -> (Dataset, Vec<Vec<fairmix::Label>>, serde_json::Value) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/ppv_witness");
    let d = Dataset::load_csv(dir.join("dataset.csv")).unwrap();
    let preds = load_prediction_matrix(dir.join("predictions.csv"), &d)
        .unwrap()
        .iter()
        .map(|t| t.predictions().to_vec())
        .collect();
    let meta = serde_json::from_str(&std::fs::read_to_string(dir.join("witness.json")).unwrap()).unwrap();
    (d, preds, meta)
}

fn non_closure() -> Outcome {
    let (seed, budget) = (11, 5000);
    let live = ppv_counterexample_search(seed, budget).ok_or("no witness within the trial budget")?;
    let live_preds: Vec<_> = live.members.iter().map(|t| t.predictions().to_vec()).collect();
    for p in &live_preds {
        ensure(exactly_fair(MetricKind::Ppv, p, &live.dataset), || "live member not PPV-fair".into())?;
    }
    ensure(live.ensemble_gap.abs() >= 0.05, || format!("live gap {}", live.ensemble_gap))?;

    let (d, preds, meta) = witness_fixture();
    ensure(meta["witness"]["seed"] == seed && meta["witness"]["trial"] == live.trial, || "fixture seed/trial".into())?;
    ensure(d.instances() == live.dataset.instances() && preds == live_preds, || "search no longer reproduces the frozen witness".into())?;
    for p in &preds {
        ensure(exactly_fair(MetricKind::Ppv, p, &d), || "frozen member not PPV-fair".into())?;
    }
    let w = [0.5, 0.5];
    let oracle = ensemble_gap(MetricKind::Ppv, &preds, &w, &d).ok_or("oracle PPV undefined")?;
    let lib = Ensemble::new(tables(&preds, &d), w.to_vec()).unwrap();
    let rep = lib.closure_check(MetricKind::Ppv, &d).unwrap();
    let lib_gap = rep.ensemble_gap.unwrap();
    ensure(!rep.linear, || "PPV reported linear".into())?;
    ensure(oracle.abs() >= 0.05, || format!("oracle gap {oracle}"))?;
    ensure((lib_gap - oracle).abs() <= 1e-12, || format!("library {lib_gap} vs oracle {oracle}"))?;
    let recorded = meta["witness"]["ensemble_gap"].as_f64().unwrap();
    ensure((recorded - oracle).abs() <= 1e-12, || format!("recorded {recorded} vs oracle {oracle}"))?;
    Ok(format!(
        "seed {seed}, trial {} of {budget}: member PPV gaps 0, ensemble PPV gap {oracle:.6}",
        live.trial
    ))
}

struct Soundness {
    solved: usize,
    infeasible: usize,
}

fn check_solution(
    label: &str,
    members: &[Classifier],
    d: &Dataset,
    kinds: &[MetricKind],
    tol: f64,
    tally: &mut Soundness,
) -> Result<(), String> {
    let sol = solve_fair_mixture(members, d, kinds, tol, Objective::MaxAccuracy).map_err(|e| format!("{label}: {e}"))?;
    let check = oracle_check(members, d, &sol, 200).map_err(|e| format!("{label}: {e}"))?;
    if sol.status == SolveStatus::Infeasible {
        ensure(check.grid.strict_weights.is_none(), || format!("{label}: LP infeasible but grid found {:?}", check.grid.strict_weights))?;
        tally.infeasible += 1;
        return Ok(());
    }
    ensure(sol.status == SolveStatus::Optimal, || format!("{label}: status {:?}", sol.status))?;
    let preds = member_preds(members, d);
    let w = &sol.weights;
    ensure(w.iter().all(|&x| x >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() <= 1e-9, || format!("{label}: weights {w:?}"))?;
    for &k in kinds {
        let g = ensemble_gap(k, &preds, w, d).unwrap();
        ensure(g.abs() <= tol + 1e-9, || format!("{label}: {k} gap {g} > {tol}"))?;
    }
    let acc = sol.accuracy.unwrap();
    let oracle_acc = ensemble_accuracy(&preds, w, d);
    ensure((acc - oracle_acc).abs() <= 1e-9, || format!("{label}: accuracy {acc} vs {oracle_acc}"))?;
    if let Some(g) = check.grid.accuracy {
        ensure(acc >= g - check.resolution_bound - 1e-12, || {
            format!("{label}: LP {acc} < grid {g} - {}", check.resolution_bound)
        })?;
    }
    tally.solved += 1;
    Ok(())
}

fn optimizer() -> Outcome {
    let mut tally = Soundness { solved: 0, infeasible: 0 };
    let s2 = Scenario::by_number(2).unwrap();
    check_solution("figure2", &s2.members, &s2.dataset, &[MetricKind::AcceptanceRate], 0.0, &mut tally)?;
    let sol = solve_fair_mixture(&s2.members, &s2.dataset, &[MetricKind::AcceptanceRate], 0.0, Objective::FeasibilityOnly).unwrap();
    ensure((sol.weights[0] - 1.0 / 3.0).abs() <= 1e-9, || format!("figure2 feasibility {:?}", sol.weights))?;
    let s3 = Scenario::by_number(3).unwrap();
    check_solution("figure3", &s3.members, &s3.dataset, &[MetricKind::AcceptanceRate], 0.0, &mut tally)?;
    let sol = solve_fair_mixture(&s3.members, &s3.dataset, &[MetricKind::AcceptanceRate], 0.0, Objective::MaxAccuracy).unwrap();
    ensure(sol.accuracy.is_some_and(|a| (a - 0.75).abs() <= 1e-9), || format!("figure3 accuracy {:?}", sol.accuracy))?;

    let mut rng = rng(0x0b71_7e57);
    let mut case = 0;
    while case < 100 {
        let cells = random_cells(&mut rng);
        let d = &cells.dataset;
        let m = rng.random_range(2..=3);
        let preds: Vec<_> = (0..m).map(|_| random_predictions(&mut rng, d.len())).collect();
        let n_kinds = rng.random_range(1..=2);
        let first = rng.random_range(0..3);
        let kinds: Vec<MetricKind> = (0..n_kinds).map(|i| LINEAR[(first + i) % 3]).collect();
        let tol = [0.0, 0.05, 0.1][rng.random_range(0..3)];
        check_solution(&format!("random case {case}"), &tables(&preds, d), d, &kinds, tol, &mut tally)?;
        case += 1;
    }
    Ok(format!(
        "figures 2, 3 and 100 random instances: {} optimal, {} infeasible (grid agrees), r = 200",
        tally.solved, tally.infeasible
    ))
}

fn monte_carlo() -> Outcome {
    let s = Scenario::by_number(2).unwrap();
    let ens = s.ensemble();
    let (n, seed) = (100_000, 2024);
    let a = ens.sample(&s.dataset, n, seed, SamplingMode::PerDraw).map_err(|e| e.to_string())?;
    let r = 2.0 / 9.0;
    let se = (r * (1.0 - r) / n as f64).sqrt();
    let mut parts = Vec::new();
    for z in Sensitive::BOTH {
        let est = a.estimate(MetricKind::AcceptanceRate, z).unwrap().mean.unwrap();
        let dev = (est - r).abs() / se;
        ensure(dev <= 3.0, || format!("z={}: {est} is {dev:.2} SE from 2/9", z.as_u8()))?;
        parts.push(format!("z={} {est:.5} ({dev:.2} SE)", z.as_u8()));
    }
    let b = ens.sample(&s.dataset, n, seed, SamplingMode::PerDraw).unwrap();
    let (mut csv_a, mut csv_b) = (Vec::new(), Vec::new());
    a.write_csv(&mut csv_a).unwrap();
    b.write_csv(&mut csv_b).unwrap();
    ensure(a.labels == b.labels && csv_a == csv_b, || "rerun differs".into())?;
    let bits = |rep: &fairmix::ensemble::SampleReport| -> Vec<u64> {
        rep.estimates.iter().filter_map(|e| e.mean).map(f64::to_bits).collect()
    };
    ensure(bits(&a) == bits(&b), || "estimates differ bitwise".into())?;
    Ok(format!("n = {n}, seed {seed}: {}; rerun bit-identical", parts.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("Figure 2 reproduction", figure2),
        ("Figure 3 reproduction", figure3),
        ("Figure 1 reproduction", figure1),
        ("Figure 4 reproduction", figure4),
        ("Closure property suite", closure),
        ("Non-closure witness", non_closure),
        ("Optimizer soundness", optimizer),
        ("Monte Carlo validation", monte_carlo),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} [{secs:.2}s] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name} [{secs:.2}s] {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
