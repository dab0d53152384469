//! The kidney-acceptance MDP data model.
//!
//! A state is a triple `(h, k, m)`: patient state `h ∈ {1..H+1}` (larger is
//! sicker, `H+1` is death), kidney-offer state `k ∈ {1..K+1}` (larger is worse
//! quality, `K+1` means no offer), and donor-recipient mismatch level
//! `m ∈ {1..M}` (larger is more mismatched). The decision maker either waits
//! (`W`) or accepts the offer for transplantation (`T`). A successful
//! transplant ends the process with terminal reward `r(h,k,m)`; a failed one
//! pays the per-period reward `c(h)` and moves the patient by the post-failure
//! kernel. The post-transplantation success state is not materialized: it is
//! absorbing with zero reward, so acceptance contributes only the terminal
//! reward.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::tensor::{Mat, Tensor3};

/// Row sums of probability tables must match 1 this closely.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// State-space extents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    /// Count of living patient states; the death state has index `H+1`.
    #[serde(rename = "H")]
    pub patient: usize,
    /// Count of real kidney qualities; index `K+1` means no offer.
    #[serde(rename = "K")]
    pub kidney: usize,
    /// Count of mismatch levels.
    #[serde(rename = "M")]
    pub mismatch: usize,
}

impl Dimensions {
    pub fn new(patient: usize, kidney: usize, mismatch: usize) -> Self {
        Self { patient, kidney, mismatch }
    }

    /// Index of the absorbing death state.
    pub fn death(&self) -> usize {
        self.patient + 1
    }

    /// Index of the no-offer kidney state.
    pub fn no_offer(&self) -> usize {
        self.kidney + 1
    }

    /// Total number of `(h, k, m)` states.
    pub fn n_states(&self) -> usize {
        (self.patient + 1) * (self.kidney + 1) * self.mismatch
    }

    /// Number of states where both actions are feasible.
    pub fn n_decision_states(&self) -> usize {
        self.patient * self.kidney * self.mismatch
    }
}

/// The two actions: wait for the next offer, or transplant the current one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "W")]
    Wait,
    #[serde(rename = "T")]
    Transplant,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Wait => "W",
            Action::Transplant => "T",
        })
    }
}

/// A single `(h, k, m)` state, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateIndex {
    pub h: usize,
    pub k: usize,
    pub m: usize,
}

impl StateIndex {
    pub fn new(h: usize, k: usize, m: usize) -> Self {
        Self { h, k, m }
    }

    pub fn in_range(&self, dims: &Dimensions) -> bool {
        (1..=dims.death()).contains(&self.h)
            && (1..=dims.no_offer()).contains(&self.k)
            && (1..=dims.mismatch).contains(&self.m)
    }

    /// Transplanting is feasible only when a real offer is present and the
    /// patient is alive.
    pub fn can_transplant(&self, dims: &Dimensions) -> bool {
        self.k <= dims.kidney && self.h <= dims.patient
    }

    pub fn feasible_actions(&self, dims: &Dimensions) -> &'static [Action] {
        if self.can_transplant(dims) {
            &[Action::Wait, Action::Transplant]
        } else {
            &[Action::Wait]
        }
    }
}

/// Full MDP description: dimensions, discount factor, kernels, and rewards.
///
/// Kernel semantics (all rows are conditional distributions):
/// - `wait_kernel`: `(H+1)×(H+1)`, `get(h, h')` = P(next patient state `h'` |
///   current `h`, action `W`).
/// - `fail_kernel`: same shape, conditioning on a transplant failure instead.
/// - `offer_pmf`: `(H+1)×(K+1)`, `get(h, k)` = P(offer state `k` | patient
///   state `h`).
/// - `mismatch_pmf`: length `M`, i.i.d. mismatch level distribution.
/// - `fail_prob`: `(H+1)×K×M`, probability a transplant at `(h,k,m)` fails.
/// - `wait_reward`: length `H+1`, per-period reward `c(h)` for staying alive.
/// - `transplant_reward`: `(H+1)×K×M`, terminal reward `r(h,k,m)` of a
///   successful transplant.
///
/// The rows of `fail_prob` and `transplant_reward` at `h = H+1` are stored but
/// never read (transplanting is infeasible at death); validation only requires
/// `r(H+1,·,·) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub dims: Dimensions,
    pub discount: f64,
    pub wait_kernel: Mat,
    pub fail_kernel: Mat,
    pub offer_pmf: Mat,
    pub mismatch_pmf: Vec<f64>,
    pub fail_prob: Tensor3,
    pub wait_reward: Vec<f64>,
    pub transplant_reward: Tensor3,
}

impl ModelSpec {
    /// Per-period death probability under waiting, `P(H+1 | h)`.
    pub fn death_prob(&self, h: usize) -> f64 {
        self.wait_kernel.get(h, self.dims.death())
    }
}

/// One violated model invariant, with enough indices to locate it.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    BadDimensions { message: String },
    Shape { field: &'static str, expected: String, actual: String },
    NonFinite { field: &'static str },
    RowSum { field: &'static str, row: usize, sum: f64 },
    PmfSum { field: &'static str, sum: f64 },
    NegativeEntry { field: &'static str, index: Vec<usize>, value: f64 },
    ProbabilityRange { field: &'static str, index: Vec<usize>, value: f64 },
    DeathNotAbsorbing { column: usize, value: f64 },
    OfferAfterDeath { value: f64 },
    WaitRewardAtDeath { value: f64 },
    TransplantRewardAtDeath { k: usize, m: usize, value: f64 },
    FailProbNotBelowOne { h: usize, k: usize, m: usize, value: f64 },
    DiscountRange { value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BadDimensions { message } => write!(f, "bad dimensions: {message}"),
            Violation::Shape { field, expected, actual } => {
                write!(f, "{field} has shape {actual}, expected {expected}")
            }
            Violation::NonFinite { field } => write!(f, "{field} contains non-finite entries"),
            Violation::RowSum { field, row, sum } => {
                write!(f, "{field} row {row} sums to {sum}, expected 1")
            }
            Violation::PmfSum { field, sum } => {
                write!(f, "{field} sums to {sum}, expected 1")
            }
            Violation::NegativeEntry { field, index, value } => {
                write!(f, "{field}{index:?} = {value} is negative")
            }
            Violation::ProbabilityRange { field, index, value } => {
                write!(f, "{field}{index:?} = {value} is outside [0, 1]")
            }
            Violation::DeathNotAbsorbing { column, value } => {
                write!(f, "death state is not absorbing: wait_kernel(H+1, {column}) = {value}")
            }
            Violation::OfferAfterDeath { value } => {
                write!(f, "offer after death: offer_pmf(H+1, K+1) = {value}, expected 1")
            }
            Violation::WaitRewardAtDeath { value } => {
                write!(f, "wait reward at death nonzero: c(H+1) = {value}")
            }
            Violation::TransplantRewardAtDeath { k, m, value } => {
                write!(f, "terminal reward at death nonzero: r(H+1,{k},{m}) = {value}")
            }
            Violation::FailProbNotBelowOne { h, k, m, value } => {
                write!(f, "failure probability not strictly below 1: F({h},{k},{m}) = {value}")
            }
            Violation::DiscountRange { value } => {
                write!(f, "discount factor {value} outside [0, 1]")
            }
        }
    }
}

/// Outcome of [`validate_model`]: empty means the spec passes.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of a [`ModelSpec`] and reports all
/// violations found. Never errors: the report carries the outcome.
pub fn validate_model(spec: &ModelSpec) -> ValidationReport {
    let mut v = Vec::new();
    let d = &spec.dims;

    if d.patient < 1 || d.kidney < 1 || d.mismatch < 1 {
        v.push(Violation::BadDimensions {
            message: format!("H={}, K={}, M={} must all be >= 1", d.patient, d.kidney, d.mismatch),
        });
        return ValidationReport { violations: v };
    }

    let nh = d.death();
    let nk = d.no_offer();
    let nm = d.mismatch;

    let mut shape_ok = true;
    let check_mat = |field, mat: &Mat, rows: usize, cols: usize, v: &mut Vec<Violation>| {
        if mat.rows() != rows || mat.cols() != cols {
            v.push(Violation::Shape {
                field,
                expected: format!("{rows}x{cols}"),
                actual: format!("{}x{}", mat.rows(), mat.cols()),
            });
            false
        } else {
            true
        }
    };
    shape_ok &= check_mat("wait_kernel", &spec.wait_kernel, nh, nh, &mut v);
    shape_ok &= check_mat("fail_kernel", &spec.fail_kernel, nh, nh, &mut v);
    shape_ok &= check_mat("offer_pmf", &spec.offer_pmf, nh, nk, &mut v);
    for (field, t) in [("fail_prob", &spec.fail_prob), ("transplant_reward", &spec.transplant_reward)] {
        if t.extents() != (nh, d.kidney, nm) {
            v.push(Violation::Shape {
                field,
                expected: format!("{nh}x{}x{nm}", d.kidney),
                actual: format!("{:?}", t.extents()),
            });
            shape_ok = false;
        }
    }
    if spec.mismatch_pmf.len() != nm {
        v.push(Violation::Shape {
            field: "mismatch_pmf",
            expected: format!("{nm}"),
            actual: format!("{}", spec.mismatch_pmf.len()),
        });
        shape_ok = false;
    }
    if spec.wait_reward.len() != nh {
        v.push(Violation::Shape {
            field: "wait_reward",
            expected: format!("{nh}"),
            actual: format!("{}", spec.wait_reward.len()),
        });
        shape_ok = false;
    }
    if !shape_ok {
        return ValidationReport { violations: v };
    }

    for (field, mat) in [
        ("wait_kernel", &spec.wait_kernel),
        ("fail_kernel", &spec.fail_kernel),
        ("offer_pmf", &spec.offer_pmf),
    ] {
        if !mat.all_finite() {
            v.push(Violation::NonFinite { field });
            continue;
        }
        for i in 1..=mat.rows() {
            let mut sum = 0.0;
            for j in 1..=mat.cols() {
                let p = mat.get(i, j);
                if !(0.0..=1.0 + ROW_SUM_TOL).contains(&p) {
                    v.push(Violation::ProbabilityRange { field, index: vec![i, j], value: p });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                v.push(Violation::RowSum { field, row: i, sum });
            }
        }
    }

    let msum: f64 = spec.mismatch_pmf.iter().sum();
    if !spec.mismatch_pmf.iter().all(|p| p.is_finite()) {
        v.push(Violation::NonFinite { field: "mismatch_pmf" });
    } else {
        for (i, &p) in spec.mismatch_pmf.iter().enumerate() {
            if !(0.0..=1.0 + ROW_SUM_TOL).contains(&p) {
                v.push(Violation::ProbabilityRange {
                    field: "mismatch_pmf",
                    index: vec![i + 1],
                    value: p,
                });
            }
        }
        if (msum - 1.0).abs() > ROW_SUM_TOL {
            v.push(Violation::PmfSum { field: "mismatch_pmf", sum: msum });
        }
    }

    // Death is absorbing under waiting, and no offer arrives after death.
    for h in 1..=d.patient {
        let p = spec.wait_kernel.get(nh, h);
        if p.abs() > ROW_SUM_TOL {
            v.push(Violation::DeathNotAbsorbing { column: h, value: p });
        }
    }
    let stay = spec.wait_kernel.get(nh, nh);
    if (stay - 1.0).abs() > ROW_SUM_TOL {
        v.push(Violation::DeathNotAbsorbing { column: nh, value: stay });
    }
    let no_offer_at_death = spec.offer_pmf.get(nh, nk);
    if (no_offer_at_death - 1.0).abs() > ROW_SUM_TOL {
        v.push(Violation::OfferAfterDeath { value: no_offer_at_death });
    }

    if !spec.wait_reward.iter().all(|x| x.is_finite()) {
        v.push(Violation::NonFinite { field: "wait_reward" });
    } else {
        for (i, &c) in spec.wait_reward.iter().enumerate() {
            if c < 0.0 {
                v.push(Violation::NegativeEntry {
                    field: "wait_reward",
                    index: vec![i + 1],
                    value: c,
                });
            }
        }
        if spec.wait_reward[nh - 1] != 0.0 {
            v.push(Violation::WaitRewardAtDeath { value: spec.wait_reward[nh - 1] });
        }
    }

    if !spec.transplant_reward.all_finite() {
        v.push(Violation::NonFinite { field: "transplant_reward" });
    } else {
        for (h, k, m, r) in spec.transplant_reward.iter() {
            if r < 0.0 {
                v.push(Violation::NegativeEntry {
                    field: "transplant_reward",
                    index: vec![h, k, m],
                    value: r,
                });
            }
            if h == nh && r != 0.0 {
                v.push(Violation::TransplantRewardAtDeath { k, m, value: r });
            }
        }
    }

    if !spec.fail_prob.all_finite() {
        v.push(Violation::NonFinite { field: "fail_prob" });
    } else {
        for (h, k, m, p) in spec.fail_prob.iter() {
            if p < 0.0 {
                v.push(Violation::ProbabilityRange {
                    field: "fail_prob",
                    index: vec![h, k, m],
                    value: p,
                });
            }
            if p >= 1.0 {
                v.push(Violation::FailProbNotBelowOne { h, k, m, value: p });
            }
        }
    }

    if !spec.discount.is_finite() || !(0.0..=1.0).contains(&spec.discount) {
        v.push(Violation::DiscountRange { value: spec.discount });
    }

    ValidationReport { violations: v }
}

/// Stationary policy over the decision states `h <= H`, `k <= K`.
///
/// States with `k = K+1` or `h = H+1` admit only `W` and are not stored. An
/// optional tie table marks states where both actions were optimal within the
/// tie tolerance, so the optimal-action set can be reported as `{W, T}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PolicyRepr", into = "PolicyRepr")]
pub struct Policy {
    dims: Dimensions,
    actions: Vec<Action>,
    ties: Option<Vec<bool>>,
}

#[derive(Serialize, Deserialize)]
struct PolicyRepr {
    dims: Dimensions,
    /// `actions[h-1][k-1][m-1]` for the decision states.
    actions: Vec<Vec<Vec<Action>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ties: Option<Vec<Vec<Vec<bool>>>>,
}

impl Policy {
    /// All-wait policy.
    pub fn all_wait(dims: Dimensions) -> Self {
        let n = dims.n_decision_states();
        Self { dims, actions: vec![Action::Wait; n], ties: None }
    }

    /// Builds a policy from a function over the decision states.
    pub fn from_fn(dims: Dimensions, mut f: impl FnMut(usize, usize, usize) -> Action) -> Self {
        let mut p = Self::all_wait(dims);
        for h in 1..=dims.patient {
            for k in 1..=dims.kidney {
                for m in 1..=dims.mismatch {
                    let a = f(h, k, m);
                    p.set_action(h, k, m, a);
                }
            }
        }
        p
    }

    pub fn dims(&self) -> &Dimensions {
        &self.dims
    }

    #[inline]
    fn offset(&self, h: usize, k: usize, m: usize) -> usize {
        debug_assert!(
            h >= 1 && h <= self.dims.patient && k >= 1 && k <= self.dims.kidney
                && m >= 1 && m <= self.dims.mismatch
        );
        ((h - 1) * self.dims.kidney + (k - 1)) * self.dims.mismatch + (m - 1)
    }

    /// Action at any state; `W` whenever transplanting is infeasible.
    #[inline]
    pub fn action(&self, h: usize, k: usize, m: usize) -> Action {
        if h > self.dims.patient || k > self.dims.kidney {
            Action::Wait
        } else {
            self.actions[self.offset(h, k, m)]
        }
    }

    pub fn set_action(&mut self, h: usize, k: usize, m: usize, a: Action) {
        let o = self.offset(h, k, m);
        self.actions[o] = a;
    }

    /// True when both actions were optimal at `(h,k,m)` within the tie
    /// tolerance used at extraction.
    pub fn is_tie(&self, h: usize, k: usize, m: usize) -> bool {
        if h > self.dims.patient || k > self.dims.kidney {
            return false;
        }
        match &self.ties {
            Some(t) => t[self.offset(h, k, m)],
            None => false,
        }
    }

    pub fn set_ties(&mut self, ties: Vec<bool>) {
        assert_eq!(ties.len(), self.actions.len());
        self.ties = Some(ties);
    }

    /// Count of decision states whose action is `T`.
    pub fn n_accepting(&self) -> usize {
        self.actions.iter().filter(|a| **a == Action::Transplant).count()
    }
}

impl TryFrom<PolicyRepr> for Policy {
    type Error = String;

    fn try_from(r: PolicyRepr) -> Result<Self, Self::Error> {
        let d = r.dims;
        let flat = |name: &str, n3: &Vec<Vec<Vec<Action>>>| -> Result<Vec<Action>, String> {
            if n3.len() != d.patient
                || n3.iter().any(|p| p.len() != d.kidney)
                || n3.iter().flatten().any(|row| row.len() != d.mismatch)
            {
                return Err(format!("{name} does not match dims"));
            }
            Ok(n3.iter().flatten().flatten().copied().collect())
        };
        let actions = flat("actions", &r.actions)?;
        let ties = match r.ties {
            None => None,
            Some(t) => {
                if t.len() != d.patient
                    || t.iter().any(|p| p.len() != d.kidney)
                    || t.iter().flatten().any(|row| row.len() != d.mismatch)
                {
                    return Err("ties does not match dims".to_string());
                }
                Some(t.into_iter().flatten().flatten().collect())
            }
        };
        Ok(Policy { dims: d, actions, ties })
    }
}

impl From<Policy> for PolicyRepr {
    fn from(p: Policy) -> Self {
        let d = p.dims;
        let mut actions = Vec::with_capacity(d.patient);
        let mut ties = p.ties.as_ref().map(|_| Vec::with_capacity(d.patient));
        for h in 1..=d.patient {
            let mut plane = Vec::with_capacity(d.kidney);
            let mut tie_plane = Vec::with_capacity(d.kidney);
            for k in 1..=d.kidney {
                let mut row = Vec::with_capacity(d.mismatch);
                let mut tie_row = Vec::with_capacity(d.mismatch);
                for m in 1..=d.mismatch {
                    row.push(p.action(h, k, m));
                    tie_row.push(p.is_tie(h, k, m));
                }
                plane.push(row);
                tie_plane.push(tie_row);
            }
            actions.push(plane);
            if let Some(t) = ties.as_mut() {
                t.push(tie_plane);
            }
        }
        PolicyRepr { dims: d, actions, ties }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{build_experiment_model, Experiment};

    fn tiny_spec() -> ModelSpec {
        // H=1, K=1, M=1: one living state, death at 2; offer or no offer.
        ModelSpec {
            dims: Dimensions::new(1, 1, 1),
            discount: 0.9,
            wait_kernel: Mat::from_rows(&[vec![0.7, 0.3], vec![0.0, 1.0]]),
            fail_kernel: Mat::from_rows(&[vec![0.5, 0.5], vec![0.0, 1.0]]),
            offer_pmf: Mat::from_rows(&[vec![0.2, 0.8], vec![0.0, 1.0]]),
            mismatch_pmf: vec![1.0],
            fail_prob: Tensor3::try_from(vec![vec![vec![0.1]], vec![vec![0.0]]]).unwrap(),
            wait_reward: vec![1.0, 0.0],
            transplant_reward: Tensor3::try_from(vec![vec![vec![5.0]], vec![vec![0.0]]]).unwrap(),
        }
    }

    #[test]
    fn valid_tiny_spec_passes() {
        assert!(validate_model(&tiny_spec()).passed());
    }

    #[test]
    fn experiment_spec_passes_validation() {
        let spec = build_experiment_model(Experiment::Exp1);
        let report = validate_model(&spec);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn bad_row_sum_is_reported_with_row() {
        let mut spec = tiny_spec();
        spec.wait_kernel.set(1, 1, 0.6); // row 1 now sums to 0.9
        let report = validate_model(&spec);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RowSum { field: "wait_kernel", row: 1, .. })));
    }

    #[test]
    fn terminal_reward_at_death_is_reported() {
        let mut spec = tiny_spec();
        spec.transplant_reward.set(2, 1, 1, 1.0);
        let report = validate_model(&spec);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::TransplantRewardAtDeath { k: 1, m: 1, .. })));
        let text = report.to_string();
        assert!(text.contains("terminal reward at death nonzero"), "{text}");
    }

    #[test]
    fn fail_prob_must_stay_below_one() {
        let mut spec = tiny_spec();
        spec.fail_prob.set(1, 1, 1, 1.0);
        let report = validate_model(&spec);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::FailProbNotBelowOne { h: 1, k: 1, m: 1, .. })));
    }

    #[test]
    fn feasible_actions_follow_state() {
        let dims = Dimensions::new(3, 2, 2);
        assert_eq!(StateIndex::new(1, 1, 1).feasible_actions(&dims).len(), 2);
        assert_eq!(StateIndex::new(1, 3, 1).feasible_actions(&dims), &[Action::Wait]);
        assert_eq!(StateIndex::new(4, 1, 1).feasible_actions(&dims), &[Action::Wait]);
    }

    #[test]
    fn policy_serde_roundtrip() {
        let dims = Dimensions::new(2, 2, 2);
        let mut p = Policy::all_wait(dims);
        p.set_action(1, 2, 1, Action::Transplant);
        p.set_ties(vec![false, false, true, false, false, false, false, false]);
        let json = serde_json::to_string(&p).unwrap();
        let back: Policy = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.action(1, 2, 1), Action::Transplant);
        assert_eq!(back.action(1, 3, 1), Action::Wait); // no-offer column implicit
    }
}
