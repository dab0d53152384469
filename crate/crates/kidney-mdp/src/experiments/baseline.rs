//! Mismatch-blind baseline: a two-dimensional MDP over (patient, kidney)
//! whose acceptance decision cannot see the mismatch level. Transplanting is
//! terminal (no failure branch, no retransplantation) with reward equal to
//! the mismatch-averaged terminal reward. Waiting follows the same dynamics
//! as the full model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Action, Dimensions, ModelSpec, Policy};
use crate::tensor::Mat;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineModel {
    pub dims: Dimensions,
    pub discount: f64,
    pub wait_kernel: Mat,
    pub offer_pmf: Mat,
    pub wait_reward: Vec<f64>,
    /// Terminal reward `r̄(h,k)`, shape `(H+1)×K`.
    pub mean_reward: Mat,
    /// True when `r̄` also averaged over the transplant-failure outcome.
    pub failure_weighted: bool,
}

/// Marginalizes the mismatch level out of a full model.
///
/// With `failure_weighted = false` (the default reading),
/// `r̄(h,k) = Σ_m M(m)·r(h,k,m)`. With `failure_weighted = true` the mean is
/// taken over the one-step transplant outcome instead:
/// `r̄(h,k) = Σ_m M(m)·[(1-F(h,k,m))·r(h,k,m) + F(h,k,m)·c(h)]`.
pub fn build_baseline_model(spec: &ModelSpec, failure_weighted: bool) -> BaselineModel {
    let d = spec.dims;
    let mut mean_reward = Mat::zeros(d.death(), d.kidney);
    for h in 1..=d.death() {
        for k in 1..=d.kidney {
            let mut sum = 0.0;
            for m in 1..=d.mismatch {
                let r = spec.transplant_reward.get(h, k, m);
                let contrib = if failure_weighted {
                    let f = spec.fail_prob.get(h, k, m);
                    (1.0 - f) * r + f * spec.wait_reward[h - 1]
                } else {
                    r
                };
                sum += spec.mismatch_pmf[m - 1] * contrib;
            }
            mean_reward.set(h, k, sum);
        }
    }
    BaselineModel {
        dims: d,
        discount: spec.discount,
        wait_kernel: spec.wait_kernel.clone(),
        offer_pmf: spec.offer_pmf.clone(),
        wait_reward: spec.wait_reward.clone(),
        mean_reward,
        failure_weighted,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineSolution {
    /// `V_D(h,k)`, shape `(H+1)×(K+1)`.
    pub values: Mat,
    /// `v_D(h) = Σ_k K(k|h)·V_D(h,k)`, length `H+1`.
    pub patient_value: Vec<f64>,
    /// Wait-action value per patient state, length `H+1`.
    pub q_wait: Vec<f64>,
    /// `D(h,k)` on the decision grid, indexed `[h-1][k-1]`.
    pub policy: Vec<Vec<Action>>,
    /// Kidney-based curve `K_D(h)`: accept iff `k < K_D(h)`. `None` when some
    /// accept set along `k` is not a prefix.
    pub kidney_limits: Option<Vec<usize>>,
    /// Patient-based curve `H_D(k)`: accept iff `h > H_D(k)`.
    pub patient_limits: Option<Vec<usize>>,
    pub iterations: usize,
    pub residual: f64,
    pub error_bound: f64,
    pub converged: bool,
}

/// Value iteration on the baseline model:
/// `V_D(h,k) = max(r̄(h,k), c(h) + λ·Σ_h' v_D(h')·H(h'|h))` for real offers,
/// the wait branch alone at `k = K+1`, death pinned to zero.
pub fn solve_baseline(
    model: &BaselineModel,
    tol: f64,
    max_iter: usize,
    tie_tol: f64,
) -> Result<BaselineSolution> {
    if !model.discount.is_finite() || model.discount >= 1.0 {
        return Err(Error::Precondition(format!(
            "baseline solve requires discount < 1 (got {})",
            model.discount
        )));
    }
    let d = model.dims;
    let nh = d.death();
    let mut values = Mat::zeros(nh, d.no_offer());
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut q_wait = vec![0.0; nh];
    while iterations < max_iter {
        let mut v = vec![0.0; nh];
        for h in 1..=nh {
            let mut sum = 0.0;
            for k in 1..=d.no_offer() {
                sum += model.offer_pmf.get(h, k) * values.get(h, k);
            }
            v[h - 1] = sum;
        }
        let mut next = Mat::zeros(nh, d.no_offer());
        let mut max_diff = 0.0_f64;
        for h in 1..=d.patient {
            let mut dot = 0.0;
            for h2 in 1..=nh {
                dot += v[h2 - 1] * model.wait_kernel.get(h, h2);
            }
            let wait = model.wait_reward[h - 1] + model.discount * dot;
            q_wait[h - 1] = wait;
            for k in 1..=d.kidney {
                let val = model.mean_reward.get(h, k).max(wait);
                next.set(h, k, val);
                max_diff = max_diff.max((val - values.get(h, k)).abs());
            }
            next.set(h, d.no_offer(), wait);
            max_diff = max_diff.max((wait - values.get(h, d.no_offer())).abs());
        }
        // Death row stays zero.
        residual = max_diff;
        values = next;
        iterations += 1;
        if residual <= tol {
            break;
        }
    }
    let converged = residual <= tol;

    let mut patient_value = vec![0.0; nh];
    for h in 1..=nh {
        let mut sum = 0.0;
        for k in 1..=d.no_offer() {
            sum += model.offer_pmf.get(h, k) * values.get(h, k);
        }
        patient_value[h - 1] = sum;
    }

    let mut policy = vec![vec![Action::Wait; d.kidney]; d.patient];
    for h in 1..=d.patient {
        for k in 1..=d.kidney {
            if model.mean_reward.get(h, k) >= q_wait[h - 1] - tie_tol {
                policy[h - 1][k - 1] = Action::Transplant;
            }
        }
    }

    // Kidney-based curve: accept set along k must be a prefix for each h.
    let mut kidney_limits = Some(Vec::with_capacity(d.patient));
    for h in 1..=d.patient {
        let first_w = (1..=d.kidney)
            .find(|&k| policy[h - 1][k - 1] == Action::Wait)
            .unwrap_or(d.kidney + 1);
        let prefix_ok =
            (first_w..=d.kidney).all(|k| policy[h - 1][k - 1] == Action::Wait);
        match (&mut kidney_limits, prefix_ok) {
            (Some(v), true) => v.push(first_w),
            _ => kidney_limits = None,
        }
    }
    // Patient-based curve: accept set along h must be a suffix for each k.
    let mut patient_limits = Some(Vec::with_capacity(d.kidney));
    for k in 1..=d.kidney {
        let last_w = (1..=d.patient)
            .rev()
            .find(|&h| policy[h - 1][k - 1] == Action::Wait)
            .unwrap_or(0);
        let suffix_ok = (1..=last_w).all(|h| policy[h - 1][k - 1] == Action::Wait);
        match (&mut patient_limits, suffix_ok) {
            (Some(v), true) => v.push(last_w),
            _ => patient_limits = None,
        }
    }

    let error_bound = model.discount * residual / (1.0 - model.discount);
    Ok(BaselineSolution {
        values,
        patient_value,
        q_wait,
        policy,
        kidney_limits,
        patient_limits,
        iterations,
        residual,
        error_bound,
        converged,
    })
}

/// Lifts the baseline policy into the full state space:
/// `D1(h,k,m) = D(h,k)` for every mismatch level.
pub fn lift_baseline_policy(baseline: &BaselineSolution, dims: Dimensions) -> Policy {
    Policy::from_fn(dims, |h, k, _m| baseline.policy[h - 1][k - 1])
}
