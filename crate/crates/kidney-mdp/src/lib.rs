//! Solver and structural-analysis toolkit for an optimal-stopping MDP of
//! kidney-offer acceptance with explicit donor-recipient incompatibility.
//!
//! The model tracks a patient state, the quality of the current kidney offer,
//! and the offer's mismatch level. At each epoch the decision maker waits or
//! transplants; transplants can fail and return the (worsened) patient to the
//! waitlist. The crate provides:
//!
//! - [`model`]: the MDP data types and validation;
//! - [`solver`]: the Bellman operator, value iteration, Q-values, greedy
//!   policies, and exact policy evaluation;
//! - [`structure`]: IFR/stochastic-order checks, the nine structural
//!   assumptions, value monotonicity, control-limit extraction and
//!   consistency, and dominance comparisons between models;
//! - [`experiments`]: builders for the two reference experiments and the
//!   mismatch-blind baseline comparison;
//! - [`sim`]: a deterministic-replay Monte Carlo simulator;
//! - [`generate`]: random model generators for property tests;
//! - [`io`]: JSON and CSV file formats.

pub mod error;
pub mod experiments;
pub mod generate;
pub mod io;
pub mod model;
pub mod sim;
pub mod solver;
pub mod structure;
pub mod tensor;

pub use error::{Error, Result};
pub use model::{
    validate_model, Action, Dimensions, ModelSpec, Policy, StateIndex, ValidationReport,
};
pub use solver::{
    bellman_backup, evaluate_policy, greedy_policy, q_values, solve_value_iteration, PolicyValue,
    QFunction, Solution, SolveOptions,
};
pub use structure::{
    check_assumptions, check_ifr, check_stochastic_order, compare_dominance,
    extract_control_limits, verify_limit_consistency, verify_value_monotonicity,
    AssumptionId, AssumptionReport, ControlLimitReport, DominanceMode, DominanceReport,
    MonotonicityReport,
};
pub use tensor::{Mat, Tensor3};
