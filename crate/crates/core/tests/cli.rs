use std::path::Path;
use std::process::Command;

use fairmix::cli::{self, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_NOT_FOUND, EXIT_OK};
use fairmix::optimizer::{solve_fair_mixture, Objective};
use fairmix::{Dataset, Ensemble, MetricKind, Scenario};
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["fairmix"];
    full.extend_from_slice(args);
    let code = cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn export(n: u8, dir: &Path) {
    let (code, _, err) = run(&["--out", p(dir), "figure", &n.to_string()]);
    assert_eq!(code, EXIT_OK, "{err}");
}

#[test]
fn figure_command_exports_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    for n in 1..=4u8 {
        let sub = dir.path().join(n.to_string());
        let (code, out, _) = run(&["--out", p(&sub), "figure", &n.to_string()]);
        assert_eq!(code, EXIT_OK);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["all_pass"], true);
        assert!(sub.join("dataset.csv").exists());
    }
    let (code, _, _) = run(&["figure", "5"]);
    assert_eq!(code, EXIT_ERROR);
}

#[test]
fn audit_output_matches_library_and_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    export(2, dir.path());
    let d = dir.path().join("dataset.csv");
    let pr = dir.path().join("predictions.csv");
    let w = dir.path().join("weights.json");
    let (code, first, _) = run(&["audit", p(&d), p(&pr), "--weights", p(&w)]);
    assert_eq!(code, EXIT_OK);
    let (_, second, _) = run(&["audit", p(&d), p(&pr), "--weights", p(&w)]);
    assert_eq!(first, second);

    let ds = Dataset::load_csv(&d).unwrap();
    let members = fairmix::classifiers::load_prediction_matrix(&pr, &ds)
        .unwrap()
        .into_iter()
        .map(fairmix::Classifier::from)
        .collect();
    let ens = Ensemble::new(members, fairmix::ensemble::WeightsFile::load(&w).unwrap()).unwrap();
    let lib = fairmix::json::to_string(&ens.audit(&ds, 1e-9).unwrap()).unwrap();
    assert_eq!(first, lib);
    // Prediction tables cannot be re-evaluated with z flipped.
    let v: Value = serde_json::from_str(&first).unwrap();
    assert!(v["treatment"]["flip_violations"].is_null());
    let v: Value = serde_json::from_str(&first).unwrap();
    let ar = v["metrics"].as_array().unwrap().iter().find(|m| m["kind"] == "acceptance_rate").unwrap();
    assert_eq!(ar["value_z0"].as_f64().unwrap(), 0.222222222222);
    assert_eq!(ar["gap"].as_f64().unwrap(), 0.0);
    assert_eq!(ar["pass"], true);

    let (code, per_member, _) = run(&["audit", p(&d), p(&pr)]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&per_member).unwrap();
    assert_eq!(v["classifiers"][0]["name"], "clf_1");

    let (code, csv, _) = run(&["--format", "csv", "audit", p(&d), p(&pr)]);
    assert_eq!(code, EXIT_OK);
    assert!(csv.starts_with("name,kind,value_z0,value_z1,gap,pass\n"));
}

#[test]
fn optimize_matches_library_and_exits_by_status() {
    let dir = tempfile::tempdir().unwrap();
    export(3, dir.path());
    let d = dir.path().join("dataset.csv");
    let pr = dir.path().join("predictions.csv");
    let (code, out, _) = run(&["optimize", p(&d), p(&pr), "--metric", "acceptance_rate", "--verify"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["status"], "optimal");
    assert_eq!(v["accuracy"].as_f64().unwrap(), 0.75);
    assert_eq!(v["oracle"]["within_bound"], true);

    let s = Scenario::by_number(3).unwrap();
    let sol = solve_fair_mixture(&s.members, &s.dataset, &[MetricKind::AcceptanceRate], 0.0, Objective::MaxAccuracy)
        .unwrap();
    let w: Vec<f64> = v["weights"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(w, sol.weights.iter().map(|&x| fairmix::json::round_float(x)).collect::<Vec<_>>());

    let (code, scen, _) = run(&["optimize", "--scenario", "figure3", "--metric", "acceptance_rate", "--verify"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(scen, out);

    // Figure 1's women-only classifier alone cannot be made fair.
    let dset = Scenario::by_number(1).unwrap();
    let one = dir.path().join("one.csv");
    fairmix::classifiers::save_prediction_matrix(&one, &dset.members[..1], &dset.dataset).unwrap();
    let d1 = dir.path().join("d1.csv");
    dset.dataset.save_csv(&d1).unwrap();
    let (code, out, _) = run(&["mix", p(&d1), p(&one)]);
    assert_eq!(code, EXIT_INFEASIBLE);
    assert_eq!(serde_json::from_str::<Value>(&out).unwrap()["status"], "infeasible");

    let (code, _, err) = run(&["optimize", p(&d), p(&pr), "--metric", "ppv"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(!err.is_empty());
}

#[test]
fn sample_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    export(2, dir.path());
    let args = |seed: &str| {
        vec![
            "--seed".to_string(),
            seed.to_string(),
            "--format".into(),
            "csv".into(),
            "sample".into(),
            p(&dir.path().join("dataset.csv")).into(),
            p(&dir.path().join("predictions.csv")).into(),
            p(&dir.path().join("weights.json")).into(),
            "--n".into(),
            "200".into(),
        ]
    };
    let go = |a: Vec<String>| {
        let mut out = Vec::new();
        let mut full = vec!["fairmix".to_string()];
        full.extend(a);
        assert_eq!(cli::run(full, &mut out, &mut Vec::new()), EXIT_OK);
        out
    };
    let a = go(args("5"));
    assert_eq!(a, go(args("5")));
    assert_ne!(a, go(args("6")));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("draw,member_index,acceptance_rate_z0,acceptance_rate_z1\n"));
    assert_eq!(text.lines().count(), 201);
}

#[test]
fn sample_files_and_degenerate_weights() {
    let dir = tempfile::tempdir().unwrap();
    export(2, dir.path());
    let (d, pr) = (dir.path().join("dataset.csv"), dir.path().join("predictions.csv"));
    let w = dir.path().join("weights.json");
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let (code, _, _) = run(&["--seed", "7", "--out", p(out), "sample", p(&d), p(&pr), p(&w), "--n", "500"]);
        assert_eq!(code, EXIT_OK);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let point = dir.path().join("point.json");
    std::fs::write(&point, r#"{"weights": [1, 0]}"#).unwrap();
    let (code, out, _) = run(&["sample", p(&d), p(&pr), p(&point), "--n", "300"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    for e in v["estimates"].as_array().unwrap() {
        assert_eq!(e["standard_error"].as_f64().unwrap(), 0.0, "{e}");
        assert_eq!(e["mean"], e["analytic"]);
    }
}

#[test]
fn counterexample_bundle_reaudits() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run(&["--seed", "11", "--out", p(dir.path()), "counterexample", "--max-trials", "5000"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["status"], "found");

    let d = Dataset::load_csv(dir.path().join("dataset.csv")).unwrap();
    let members: Vec<_> = fairmix::classifiers::load_prediction_matrix(dir.path().join("predictions.csv"), &d)
        .unwrap()
        .into_iter()
        .map(fairmix::Classifier::from)
        .collect();
    for m in &members {
        assert_eq!(fairmix::metrics::fairness_gap(MetricKind::Ppv, &m.predict_all(&d).unwrap(), &d).unwrap(), Some(0.0));
    }
    let ens = Ensemble::new(members, vec![0.5, 0.5]).unwrap();
    let g = ens.gap(MetricKind::Ppv, &d).unwrap().unwrap();
    assert!(g.abs() >= 0.05);
    assert!((v["verification"]["ensemble_ppv_gap"].as_f64().unwrap() - g).abs() < 1e-11);

    // Same check through the audit command.
    let (ds, pr, w) = (dir.path().join("dataset.csv"), dir.path().join("predictions.csv"), dir.path().join("weights.json"));
    let ppv = |doc: &Value| doc["metrics"].as_array().unwrap().iter().find(|m| m["kind"] == "ppv").unwrap()["gap"].as_f64().unwrap();
    let (code, ens_out, _) = run(&["audit", p(&ds), p(&pr), "--weights", p(&w)]);
    assert_eq!(code, EXIT_OK);
    assert!(ppv(&serde_json::from_str(&ens_out).unwrap()).abs() >= 0.05);
    let (_, members_out, _) = run(&["audit", p(&ds), p(&pr)]);
    let doc: Value = serde_json::from_str(&members_out).unwrap();
    for m in doc["classifiers"].as_array().unwrap() {
        assert_eq!(ppv(m), 0.0);
    }

    let (code, out, _) = run(&["counterexample", "--max-trials", "0"]);
    assert_eq!(code, EXIT_NOT_FOUND);
    assert_eq!(serde_json::from_str::<Value>(&out).unwrap()["status"], "not_found");
}

#[test]
fn bad_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "f_1,y,z\n0,1,7\n").unwrap();
    let (code, _, err) = run(&["audit", p(&bad), p(&bad)]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("row 1"), "{err}");
    let (code, _, _) = run(&["--tol", "-1", "figure", "1"]);
    assert_eq!(code, EXIT_ERROR);
    let (code, _, _) = run(&["nonsense"]);
    assert_eq!(code, EXIT_ERROR);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_fairmix");
    let status = Command::new(bin).args(["counterexample", "--max-trials", "0"]).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_NOT_FOUND));
    let status = Command::new(bin).args(["figure", "2"]).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    let v: Value = serde_json::from_slice(&status.stdout).unwrap();
    assert_eq!(v["scenario"], "figure2");
}
