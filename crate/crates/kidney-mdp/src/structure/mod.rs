//! Structural analyses: stochastic-order checks on kernels, the nine model
//! assumptions, value-function monotonicity, control-limit extraction and
//! consistency, and value dominance between model pairs.
//!
//! Every check is exhaustive over its index range and report-valued: a failed
//! check carries a witness whose cited inequality reproduces the violation.

mod assumptions;
mod dominance;
mod limits;
mod monotonicity;
mod orders;

pub use assumptions::{
    check_assumptions, AssumptionCheck, AssumptionId, AssumptionReport, AssumptionWitness,
};
pub use dominance::{compare_dominance, DominanceMode, DominanceReport};
pub use limits::{
    extract_control_limits, policy_from_kidney_limits, policy_from_match_limits,
    policy_from_patient_limits, verify_limit_consistency, ConsistencyReport,
    ConsistencyViolation, ControlLimitReport, LimitFamily,
};
pub use monotonicity::{
    verify_value_monotonicity, verify_value_monotonicity_with, AxisCheck, MonotonicityReport,
};
pub use orders::{check_ifr, check_stochastic_order, OrderCheck, OrderWitness, ORDER_TOL};
