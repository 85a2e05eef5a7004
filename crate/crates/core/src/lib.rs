//! Learning causal Bayesian networks from randomized trials and explaining
//! execution failures by contrast with the nearest parametrization that is
//! predicted to succeed.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command-line
//! driver and parallel dataset generation live in the `failex` crate.
//!
//! Pipeline:
//!
//! 1. [`simulator`] produces randomized stacking trials.
//! 2. [`discretize`] maps continuous causes onto equal-width intervals.
//! 3. [`structure`] learns a DAG with Grow-Shrink and G² independence tests.
//! 4. [`params`] fits maximum-likelihood conditional probability tables.
//! 5. [`explain`] runs a breadth-first search over single-variable changes
//!    of the outcome's parents and renders the contrast as a sentence.
//! 6. [`eval`] scores models: cross-validated log loss, agreement with
//!    empirical success rates, and monotonicity checks.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod discretize;
pub mod error;
pub mod eval;
pub mod explain;
pub mod params;
pub mod simulator;
pub mod stats;
pub mod structure;
pub mod variable;

pub use discretize::{build_scheme, discretize_dataset, discretize_value, DiscretizationScheme, Intervals, Levels};
pub use error::{Error, Result};
pub use explain::{explain_failure, explain_from, neighbors, render_explanation, Assignment, Change, Direction, ExplanationResult, Lexicon};
pub use params::{fit_mle, query_success_prob, BayesNet, Cpt, SuccessProb};
pub use structure::{blankets_to_dag, g2_test, learn_markov_blanket, learn_structure, CiTestResult, Dag};
pub use variable::{Dataset, Domain, GoalCondition, LevelTable, Sample, Value, VariableKind, VariableSpec};
