//! Mixture-weight optimization over a fixed set of classifiers.
//!
//! Fairness constraints on acceptance rate, TPR and TNR are linear in the
//! mixture weights, so "most accurate fair ensemble" is a small LP over the
//! probability simplex. PPV and NPV are ratios of linear forms and are only
//! evaluated after the fact.

mod counterexample;
mod grid;
mod mixture;
mod simplex;
mod threshold;

pub use counterexample::{ppv_counterexample_search, PpvWitness};
pub use grid::{grid_oracle, GridResult};
pub use mixture::{solve_fair_mixture, MemberSummary, MixtureSolution, Objective};
pub use simplex::{simplex_solve, LinearProgram, LpSolution, SolveStatus, MAX_VARIABLES, PIVOT_TOLERANCE};
pub use threshold::{best_fair_single_threshold, Direction, ThresholdResult};
