//! Command-line front end. `run` is what the `fairmix` binary calls; it is
//! exposed so tests can drive the CLI in-process.
//!
//! Exit codes: 0 success, 1 input or contract error, 2 infeasible, 3 not found.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::classifiers::{load_prediction_matrix, save_prediction_matrix, Classifier};
use crate::dataset::Dataset;
use crate::ensemble::{Ensemble, SamplingMode, WeightsFile};
use crate::error::{Error, Result};
use crate::json;
use crate::metrics::{self, audit_classifier, FairnessReport, MetricKind};
use crate::optimizer::{
    grid_oracle, ppv_counterexample_search, solve_fair_mixture, GridResult, MixtureSolution, Objective, SolveStatus,
};
use crate::scenarios::Scenario;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_NOT_FOUND: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fairmix", version, about = "Fairness auditing and fair mixture weights for random classifier ensembles")]
pub struct RunConfig {
    /// Fairness tolerance. Defaults to 1e-9 for audits and 0 for mix/optimize.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output file (directory for `figure` and `counterexample`); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fairness report for each classifier, or for their ensemble with --weights.
    Audit {
        dataset: PathBuf,
        predictions: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Find any mixture satisfying the fairness constraints.
    Mix(MixArgs),
    /// Most accurate mixture satisfying the fairness constraints.
    Optimize(MixArgs),
    /// Monte Carlo realization of an ensemble.
    Sample {
        dataset: PathBuf,
        predictions: PathBuf,
        weights: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Draw a member per instance instead of one per draw.
        #[arg(long)]
        per_instance: bool,
    },
    /// Export and self-test one of the reference scenarios.
    Figure {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        number: u8,
    },
    /// Search for PPV-fair members whose uniform mixture is not PPV-fair.
    Counterexample {
        #[arg(long, default_value_t = 10_000)]
        max_trials: usize,
    },
}

#[derive(Debug, Args)]
pub struct MixArgs {
    /// Dataset CSV; omit when using --scenario.
    #[arg(required_unless_present = "scenario", requires = "predictions")]
    pub dataset: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    /// Use a built-in scenario (figure1..figure4) instead of files.
    #[arg(long, conflicts_with = "dataset")]
    pub scenario: Option<String>,
    /// Constrained metric; repeatable. Defaults to acceptance_rate.
    #[arg(long = "metric", value_parser = parse_metric)]
    pub metrics: Vec<MetricKind>,
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
    /// Grid oracle resolution used by --verify.
    #[arg(long, default_value_t = 200)]
    pub oracle_resolution: u64,
    /// Cross-check the LP solution against the grid oracle.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    MaxAccuracy,
    Feasibility,
}

fn parse_metric(s: &str) -> std::result::Result<MetricKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    match execute(&config, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(config: &RunConfig, stdout: &mut dyn Write) -> Result<i32> {
    if let Some(t) = config.tol {
        if t.is_nan() || t < 0.0 {
            return Err(Error::InvalidArgument(format!("--tol must be >= 0, got {t}")));
        }
    }
    match &config.command {
        Command::Audit {
            dataset,
            predictions,
            weights,
        } => cmd_audit(config, dataset, predictions, weights.as_deref(), stdout),
        Command::Mix(args) => cmd_mix(config, args, Objective::FeasibilityOnly, stdout),
        Command::Optimize(args) => {
            let objective = match args.objective {
                Some(ObjectiveArg::Feasibility) => Objective::FeasibilityOnly,
                _ => Objective::MaxAccuracy,
            };
            cmd_mix(config, args, objective, stdout)
        }
        Command::Sample {
            dataset,
            predictions,
            weights,
            n,
            per_instance,
        } => {
            let mode = if *per_instance {
                SamplingMode::PerInstance
            } else {
                SamplingMode::PerDraw
            };
            cmd_sample(config, dataset, predictions, weights, *n, mode, stdout)
        }
        Command::Figure { number } => cmd_figure(config, *number, stdout),
        Command::Counterexample { max_trials } => cmd_counterexample(config, *max_trials, stdout),
    }
}

fn emit(config: &RunConfig, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &config.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn emit_json<T: Serialize>(config: &RunConfig, value: &T, stdout: &mut dyn Write) -> Result<()> {
    emit(config, &json::to_string(value)?, stdout)
}

fn require_json(config: &RunConfig, command: &str) -> Result<()> {
    if config.format == Format::Csv {
        return Err(Error::InvalidArgument(format!("--format csv is not supported by {command}")));
    }
    Ok(())
}

fn load_members(dataset: &Dataset, predictions: &Path) -> Result<Vec<Classifier>> {
    Ok(load_prediction_matrix(predictions, dataset)?
        .into_iter()
        .map(Classifier::from)
        .collect())
}

#[derive(Serialize)]
struct NamedReport<'a> {
    name: String,
    #[serde(flatten)]
    report: &'a FairnessReport,
}

pub fn audit_reports(dataset: &Dataset, members: &[Classifier], tolerance: f64) -> Result<Vec<FairnessReport>> {
    members.iter().map(|c| audit_classifier(c, dataset, tolerance)).collect()
}

/// JSON document written by `audit` without weights: `{"classifiers": [{name, ...report}]}`.
pub fn classifiers_document(named: &[(String, FairnessReport)]) -> Result<Value> {
    let list: Vec<NamedReport> = named.iter().map(|(name, report)| NamedReport { name: name.clone(), report }).collect();
    Ok(json!({ "classifiers": json::to_value(&list)? }))
}

/// Audits each member under the names `clf_1..clf_M`.
pub fn named_audit_reports(
    dataset: &Dataset,
    members: &[Classifier],
    tolerance: f64,
) -> Result<Vec<(String, FairnessReport)>> {
    Ok(audit_reports(dataset, members, tolerance)?
        .into_iter()
        .enumerate()
        .map(|(j, r)| (format!("clf_{}", j + 1), r))
        .collect())
}

fn cmd_audit(
    config: &RunConfig,
    dataset: &Path,
    predictions: &Path,
    weights: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<i32> {
    let tolerance = config.tol.unwrap_or(metrics::DEFAULT_TOLERANCE);
    let dataset = Dataset::load_csv(dataset)?;
    let members = load_members(&dataset, predictions)?;
    let named: Vec<(String, FairnessReport)> = match weights {
        Some(path) => {
            let ensemble = Ensemble::new(members, WeightsFile::load(path)?)?;
            vec![("ensemble".into(), ensemble.audit(&dataset, tolerance)?)]
        }
        None => named_audit_reports(&dataset, &members, tolerance)?,
    };
    match config.format {
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::Csv {
                row: 0,
                message: e.to_string(),
            };
            wtr.write_record(["name", "kind", "value_z0", "value_z1", "gap", "pass"])
                .map_err(csv_err)?;
            let f = |r: Option<f64>| r.map(json::format_float).unwrap_or_default();
            for (name, report) in &named {
                wtr.write_record([name.clone(), "accuracy".into(), String::new(), String::new(), String::new(), json::format_float(report.accuracy)])
                    .map_err(csv_err)?;
                for m in &report.metrics {
                    wtr.write_record([
                        name.clone(),
                        m.kind.to_string(),
                        f(m.value_z0),
                        f(m.value_z1),
                        f(m.gap),
                        m.pass.map(|p| p.to_string()).unwrap_or_default(),
                    ])
                    .map_err(csv_err)?;
                }
            }
            let bytes = wtr.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
            emit(config, &String::from_utf8_lossy(&bytes), stdout)?;
        }
        Format::Json => {
            if weights.is_some() {
                emit_json(config, &named[0].1, stdout)?;
            } else {
                emit_json(config, &classifiers_document(&named)?, stdout)?;
            }
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct MixOutput<'a> {
    #[serde(flatten)]
    solution: &'a MixtureSolution,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleCheck>,
}

#[derive(Debug, Serialize)]
pub struct OracleCheck {
    pub grid: GridResult,
    /// `(2 / r) * largest spread` of member accuracies and constrained gaps.
    pub resolution_bound: f64,
    /// LP accuracy is at least the oracle's best minus the bound.
    pub within_bound: Option<bool>,
    /// LP accuracy is at least every strictly feasible lattice point.
    pub dominates_strict: Option<bool>,
}

/// Grid-oracle cross-check for an LP mixture.
pub fn oracle_check(
    members: &[Classifier],
    dataset: &Dataset,
    solution: &MixtureSolution,
    resolution: u64,
) -> Result<OracleCheck> {
    let grid = grid_oracle(
        members,
        dataset,
        &solution.constrained,
        solution.tolerance,
        resolution,
        solution.objective,
    )?;
    let resolution_bound = 2.0 / resolution as f64 * largest_spread(solution);
    let within_bound = match (solution.accuracy, grid.accuracy) {
        (Some(lp), Some(g)) => Some(lp >= g - resolution_bound - 1e-12),
        (None, None) => Some(true),
        _ => Some(false),
    };
    let dominates_strict = match (solution.accuracy, grid.strict_accuracy) {
        (Some(lp), Some(g)) => Some(lp >= g - 1e-9),
        (_, None) => Some(true),
        (None, Some(_)) => Some(false),
    };
    Ok(OracleCheck {
        grid,
        resolution_bound,
        within_bound: (solution.objective == Objective::MaxAccuracy).then_some(within_bound).flatten(),
        dominates_strict: (solution.objective == Objective::MaxAccuracy).then_some(dominates_strict).flatten(),
    })
}

/// Largest range, over members, of accuracy and of each constrained gap.
pub fn largest_spread(solution: &MixtureSolution) -> f64 {
    let range = |vals: Vec<f64>| {
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if vals.is_empty() {
            0.0
        } else {
            max - min
        }
    };
    let mut spread = range(solution.members.iter().map(|m| m.accuracy).collect());
    for kind in &solution.constrained {
        let gaps: Vec<f64> = solution.members.iter().filter_map(|m| m.gaps[kind]).collect();
        spread = spread.max(range(gaps));
    }
    spread
}

fn cmd_mix(config: &RunConfig, args: &MixArgs, objective: Objective, stdout: &mut dyn Write) -> Result<i32> {
    require_json(config, "mix/optimize")?;
    let (dataset, members) = match (&args.scenario, &args.dataset, &args.predictions) {
        (Some(name), _, _) => {
            let s = Scenario::by_name(name)?;
            (s.dataset, s.members)
        }
        (None, Some(d), Some(p)) => {
            let dataset = Dataset::load_csv(d)?;
            let members = load_members(&dataset, p)?;
            (dataset, members)
        }
        _ => return Err(Error::InvalidArgument("need DATASET and PREDICTIONS, or --scenario".into())),
    };
    let kinds = if args.metrics.is_empty() {
        vec![MetricKind::AcceptanceRate]
    } else {
        args.metrics.clone()
    };
    let tolerance = config.tol.unwrap_or(0.0);
    let solution = solve_fair_mixture(&members, &dataset, &kinds, tolerance, objective)?;
    let oracle = if args.verify {
        Some(oracle_check(&members, &dataset, &solution, args.oracle_resolution)?)
    } else {
        None
    };
    let failed_check = oracle
        .as_ref()
        .is_some_and(|o| o.within_bound == Some(false) || o.dominates_strict == Some(false));
    emit_json(
        config,
        &MixOutput {
            solution: &solution,
            oracle,
        },
        stdout,
    )?;
    Ok(match solution.status {
        SolveStatus::Optimal if failed_check => EXIT_ERROR,
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::Unbounded => EXIT_ERROR,
    })
}

fn cmd_sample(
    config: &RunConfig,
    dataset: &Path,
    predictions: &Path,
    weights: &Path,
    n: usize,
    mode: SamplingMode,
    stdout: &mut dyn Write,
) -> Result<i32> {
    let dataset = Dataset::load_csv(dataset)?;
    let members = load_members(&dataset, predictions)?;
    let ensemble = Ensemble::new(members, WeightsFile::load(weights)?)?;
    let report = ensemble.sample(&dataset, n, config.seed, mode)?;
    match config.format {
        Format::Json => emit_json(config, &report, stdout)?,
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf).map_err(|e| Error::io("<csv>", e))?;
            emit(config, &String::from_utf8_lossy(&buf), stdout)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_figure(config: &RunConfig, number: u8, stdout: &mut dyn Write) -> Result<i32> {
    require_json(config, "figure")?;
    let scenario = Scenario::by_number(number)?;
    if let Some(dir) = &config.out {
        scenario.export(dir)?;
    }
    let checks = scenario.self_test()?;
    let all_pass = checks.iter().all(|c| c.pass);
    let text = json::to_string(&json!({
        "scenario": scenario.name,
        "description": scenario.description,
        "expectations": json::to_value(&scenario.expectations)?,
        "self_test": json::to_value(&checks)?,
        "all_pass": all_pass,
    }))?;
    stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))?;
    Ok(if all_pass { EXIT_OK } else { EXIT_ERROR })
}

fn cmd_counterexample(config: &RunConfig, max_trials: usize, stdout: &mut dyn Write) -> Result<i32> {
    require_json(config, "counterexample")?;
    let Some(witness) = ppv_counterexample_search(config.seed, max_trials) else {
        let text = json::to_string(&json!({
            "status": "not_found",
            "seed": config.seed,
            "max_trials": max_trials,
        }))?;
        stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))?;
        return Ok(EXIT_NOT_FOUND);
    };

    // Recompute through the metrics and ensemble modules.
    let members = witness.classifiers();
    let ensemble = Ensemble::new(members.clone(), witness.weights.clone())?;
    let member_gaps = members
        .iter()
        .map(|c| metrics::fairness_gap(MetricKind::Ppv, &c.predict_all(&witness.dataset)?, &witness.dataset))
        .collect::<Result<Vec<_>>>()?;
    let ensemble_gap = ensemble.gap(MetricKind::Ppv, &witness.dataset)?;
    let text = json::to_string(&json!({
        "status": "found",
        "witness": json::to_value(&witness.summary())?,
        "verification": {
            "member_ppv_gaps": json::to_value(&member_gaps)?,
            "ensemble_ppv_gap": json::to_value(&ensemble_gap)?,
        },
    }))?;
    if let Some(dir) = &config.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        witness.dataset.save_csv(dir.join("dataset.csv"))?;
        save_prediction_matrix(dir.join("predictions.csv"), &members, &witness.dataset)?;
        let weights_path = dir.join("weights.json");
        std::fs::write(&weights_path, WeightsFile::to_json(&witness.weights)).map_err(|e| Error::io(&weights_path, e))?;
        let report_path = dir.join("witness.json");
        std::fs::write(&report_path, &text).map_err(|e| Error::io(&report_path, e))?;
    }
    stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))?;
    Ok(EXIT_OK)
}
