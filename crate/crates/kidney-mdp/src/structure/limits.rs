//! Control-limit extraction from policies and consistency checks between the
//! three limit families.
//!
//! For a policy on the decision states (`h <= H`, `k <= K`, `m <= M`):
//!
//! - match-based:   accept iff `m < M*(h,k)`; requires every accept set along
//!   `m` to be a prefix. `M* = 1` never accepts, `M* = M+1` always accepts.
//! - kidney-based:  accept iff `k < K*(h,m)`; prefix along `k`; range `1..K+1`.
//! - patient-based: accept iff `h > H*(k,m)`; suffix along `h`; `H* = H` never
//!   accepts, `H* = 0` always accepts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Action, Dimensions, Policy};

/// One limit family: existence flag, the limit table when the interval
/// property holds at every slice, and otherwise the offending slices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitFamily {
    pub exists: bool,
    /// Row-major limit table; `None` unless `exists`.
    pub limits: Option<Vec<Vec<usize>>>,
    /// First slice whose accept set is not an interval of the required
    /// orientation.
    pub witness: Option<(usize, usize)>,
    /// Every offending slice, in scan order.
    pub failing_slices: Vec<(usize, usize)>,
}

impl LimitFamily {
    fn exists(limits: Vec<Vec<usize>>) -> Self {
        Self { exists: true, limits: Some(limits), witness: None, failing_slices: Vec::new() }
    }

    fn fails(slices: Vec<(usize, usize)>) -> Self {
        Self { exists: false, limits: None, witness: slices.first().copied(), failing_slices: slices }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControlLimitReport {
    pub dims: Dimensions,
    /// `M*(h,k)` indexed `[h-1][k-1]`.
    pub match_based: LimitFamily,
    /// `K*(h,m)` indexed `[h-1][m-1]`.
    pub kidney_based: LimitFamily,
    /// `H*(k,m)` indexed `[k-1][m-1]`.
    pub patient_based: LimitFamily,
}

impl ControlLimitReport {
    pub fn all_exist(&self) -> bool {
        self.match_based.exists && self.kidney_based.exists && self.patient_based.exists
    }
}

/// Extracts all three control-limit families from a policy. Death row and
/// no-offer column are excluded (only `W` is feasible there).
pub fn extract_control_limits(policy: &Policy) -> ControlLimitReport {
    let d = *policy.dims();
    let accepts = |h: usize, k: usize, m: usize| policy.action(h, k, m) == Action::Transplant;

    // Match-based: prefix along m per (h,k).
    let mut match_limits = vec![vec![0usize; d.kidney]; d.patient];
    let mut match_bad = Vec::new();
    for h in 1..=d.patient {
        for k in 1..=d.kidney {
            let first_w = (1..=d.mismatch)
                .find(|&m| !accepts(h, k, m))
                .unwrap_or(d.mismatch + 1);
            if (first_w..=d.mismatch).any(|m| accepts(h, k, m)) {
                match_bad.push((h, k));
            }
            match_limits[h - 1][k - 1] = first_w;
        }
    }

    // Kidney-based: prefix along k per (h,m).
    let mut kidney_limits = vec![vec![0usize; d.mismatch]; d.patient];
    let mut kidney_bad = Vec::new();
    for h in 1..=d.patient {
        for m in 1..=d.mismatch {
            let first_w = (1..=d.kidney)
                .find(|&k| !accepts(h, k, m))
                .unwrap_or(d.kidney + 1);
            if (first_w..=d.kidney).any(|k| accepts(h, k, m)) {
                kidney_bad.push((h, m));
            }
            kidney_limits[h - 1][m - 1] = first_w;
        }
    }

    // Patient-based: suffix along h per (k,m).
    let mut patient_limits = vec![vec![0usize; d.mismatch]; d.kidney];
    let mut patient_bad = Vec::new();
    for k in 1..=d.kidney {
        for m in 1..=d.mismatch {
            let last_w = (1..=d.patient).rev().find(|&h| !accepts(h, k, m)).unwrap_or(0);
            if (1..=last_w).any(|h| accepts(h, k, m)) {
                patient_bad.push((k, m));
            }
            patient_limits[k - 1][m - 1] = last_w;
        }
    }

    ControlLimitReport {
        dims: d,
        match_based: if match_bad.is_empty() {
            LimitFamily::exists(match_limits)
        } else {
            LimitFamily::fails(match_bad)
        },
        kidney_based: if kidney_bad.is_empty() {
            LimitFamily::exists(kidney_limits)
        } else {
            LimitFamily::fails(kidney_bad)
        },
        patient_based: if patient_bad.is_empty() {
            LimitFamily::exists(patient_limits)
        } else {
            LimitFamily::fails(patient_bad)
        },
    }
}

/// Rebuilds the policy `accept iff m < M*(h,k)`.
pub fn policy_from_match_limits(dims: Dimensions, limits: &[Vec<usize>]) -> Policy {
    Policy::from_fn(dims, |h, k, m| {
        if m < limits[h - 1][k - 1] {
            Action::Transplant
        } else {
            Action::Wait
        }
    })
}

/// Rebuilds the policy `accept iff k < K*(h,m)`.
pub fn policy_from_kidney_limits(dims: Dimensions, limits: &[Vec<usize>]) -> Policy {
    Policy::from_fn(dims, |h, k, m| {
        if k < limits[h - 1][m - 1] {
            Action::Transplant
        } else {
            Action::Wait
        }
    })
}

/// Rebuilds the policy `accept iff h > H*(k,m)`.
pub fn policy_from_patient_limits(dims: Dimensions, limits: &[Vec<usize>]) -> Policy {
    Policy::from_fn(dims, |h, k, m| {
        if h > limits[k - 1][m - 1] {
            Action::Transplant
        } else {
            Action::Wait
        }
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyViolation {
    pub rule: String,
    pub coords: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub pass: bool,
    pub violations: Vec<ConsistencyViolation>,
}

/// Checks limit-function monotonicity and the six inverse identities relating
/// the three families. All families must exist.
///
/// Monotonicity: `K*(h,m)` nonincreasing in `m`, nondecreasing in `h`;
/// `M*(h,k)` nonincreasing in `k`, nondecreasing in `h`; `H*(k,m)`
/// nondecreasing in `k` and `m`.
///
/// Inverses (min/max of an empty set maps to the always/never sentinel):
/// `M*(h,k) = min{m : k >= K*(h,m)}`, `K*(h,m) = min{k : m >= M*(h,k)}`,
/// `H*(k,m) = max{h : k >= K*(h,m)} = max{h : m >= M*(h,k)}`,
/// `M*(h,k) = min{m : h <= H*(k,m)}`, `K*(h,m) = min{k : h <= H*(k,m)}`.
pub fn verify_limit_consistency(report: &ControlLimitReport) -> Result<ConsistencyReport> {
    if !report.all_exist() {
        return Err(Error::Precondition(
            "limit consistency requires all three families to exist".to_string(),
        ));
    }
    let d = &report.dims;
    let mstar = report.match_based.limits.as_ref().unwrap();
    let kstar = report.kidney_based.limits.as_ref().unwrap();
    let hstar = report.patient_based.limits.as_ref().unwrap();

    let mut violations = Vec::new();
    let mut check = |ok: bool, rule: &str, coords: &[usize]| {
        if !ok {
            violations.push(ConsistencyViolation {
                rule: rule.to_string(),
                coords: coords.to_vec(),
            });
        }
    };

    for h in 1..=d.patient {
        for m in 1..d.mismatch {
            check(
                kstar[h - 1][m] <= kstar[h - 1][m - 1],
                "K*(h,m) nonincreasing in m",
                &[h, m],
            );
        }
        for k in 1..d.kidney {
            check(
                mstar[h - 1][k] <= mstar[h - 1][k - 1],
                "M*(h,k) nonincreasing in k",
                &[h, k],
            );
        }
    }
    for h in 1..d.patient {
        for m in 1..=d.mismatch {
            check(
                kstar[h][m - 1] >= kstar[h - 1][m - 1],
                "K*(h,m) nondecreasing in h",
                &[h, m],
            );
        }
        for k in 1..=d.kidney {
            check(
                mstar[h][k - 1] >= mstar[h - 1][k - 1],
                "M*(h,k) nondecreasing in h",
                &[h, k],
            );
        }
    }
    for m in 1..=d.mismatch {
        for k in 1..d.kidney {
            check(
                hstar[k][m - 1] >= hstar[k - 1][m - 1],
                "H*(k,m) nondecreasing in k",
                &[k, m],
            );
        }
    }
    for k in 1..=d.kidney {
        for m in 1..d.mismatch {
            check(
                hstar[k - 1][m] >= hstar[k - 1][m - 1],
                "H*(k,m) nondecreasing in m",
                &[k, m],
            );
        }
    }

    // Inverse identities.
    for h in 1..=d.patient {
        for k in 1..=d.kidney {
            let inv = (1..=d.mismatch)
                .find(|&m| k >= kstar[h - 1][m - 1])
                .unwrap_or(d.mismatch + 1);
            check(mstar[h - 1][k - 1] == inv, "M*(h,k) = min{m : k >= K*(h,m)}", &[h, k]);
            let inv = (1..=d.mismatch)
                .find(|&m| h <= hstar[k - 1][m - 1])
                .unwrap_or(d.mismatch + 1);
            check(mstar[h - 1][k - 1] == inv, "M*(h,k) = min{m : h <= H*(k,m)}", &[h, k]);
        }
        for m in 1..=d.mismatch {
            let inv = (1..=d.kidney)
                .find(|&k| m >= mstar[h - 1][k - 1])
                .unwrap_or(d.kidney + 1);
            check(kstar[h - 1][m - 1] == inv, "K*(h,m) = min{k : m >= M*(h,k)}", &[h, m]);
            let inv = (1..=d.kidney)
                .find(|&k| h <= hstar[k - 1][m - 1])
                .unwrap_or(d.kidney + 1);
            check(kstar[h - 1][m - 1] == inv, "K*(h,m) = min{k : h <= H*(k,m)}", &[h, m]);
        }
    }
    for k in 1..=d.kidney {
        for m in 1..=d.mismatch {
            let inv = (1..=d.patient).rev().find(|&h| k >= kstar[h - 1][m - 1]).unwrap_or(0);
            check(hstar[k - 1][m - 1] == inv, "H*(k,m) = max{h : k >= K*(h,m)}", &[k, m]);
            let inv = (1..=d.patient).rev().find(|&h| m >= mstar[h - 1][k - 1]).unwrap_or(0);
            check(hstar[k - 1][m - 1] == inv, "H*(k,m) = max{h : m >= M*(h,k)}", &[k, m]);
        }
    }

    Ok(ConsistencyReport { pass: violations.is_empty(), violations })
}
