//! Random classifier ensembles and their fairness properties.
//!
//! An ensemble is a probability vector over a fixed list of classifiers; each
//! decision is made by one member drawn from that distribution. This crate
//! audits classifiers and ensembles against acceptance-rate, TPR, TNR, PPV and
//! NPV parity plus equality of treatment, solves for fair accuracy-maximizing
//! mixture weights with a dense simplex LP, measures how evenly an ensemble
//! spreads benefit probability inside each group, and ships generators for the
//! four reference scenarios used throughout the tests.

pub mod classifiers;
pub mod cli;
pub mod dataset;
pub mod distributional;
pub mod ensemble;
pub mod error;
pub mod json;
pub mod metrics;
pub mod optimizer;
pub mod scenarios;

pub use classifiers::{Classifier, Label, LinearClassifier, TableClassifier};
pub use dataset::{CounterfactualPair, Dataset, Instance, Sensitive};
pub use distributional::{DispersionReport, GroupDispersion};
pub use ensemble::{BenefitProfile, Ensemble};
pub use error::{Error, Result};
pub use metrics::{FairnessReport, GroupMetric, MetricKind, Rate};
pub use optimizer::{LinearProgram, MixtureSolution, Objective, SolveStatus};
pub use scenarios::Scenario;
