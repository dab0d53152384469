//! Bellman operator, value iteration, Q-values, greedy policies, and exact
//! policy evaluation.
//!
//! The optimality equation solved here is, for `h <= H+1`, `m <= M`, and a
//! real offer `k <= K`:
//!
//! ```text
//! V(h,k,m) = max( (1-F(h,k,m))·r(h,k,m) + F(h,k,m)·(c(h) + λ·Σ v(h')·Q(h'|h)),
//!                 c(h) + λ·Σ v(h')·H(h'|h) )
//! V(h,K+1,m) = c(h) + λ·Σ v(h')·H(h'|h)
//! v(h) = Σ_k K(k|h) · Σ_m M(m) · V(h,k,m)
//! ```
//!
//! with `V(H+1,·,·) = 0` pinned (death is absorbing with zero reward). The
//! first branch of the max is acting `T`, the second `W`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Action, Dimensions, ModelSpec, Policy};
use crate::tensor::{Mat, Tensor3};

/// Solver knobs. Defaults: `tol = 1e-10`, `max_iter = 200_000`,
/// `tie_tol = 1e-9` (ties resolve to `T`).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Stop when the sup-norm residual between successive iterates is <= tol.
    pub tol: f64,
    pub max_iter: usize,
    /// Absolute tolerance for calling the two Q-values tied.
    pub tie_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200_000, tie_tol: 1e-9 }
    }
}

/// Action-conditional values. `wait` covers every state; `transplant` only
/// the decision states `h <= H`, `k <= K` where the action is feasible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QFunction {
    pub dims: Dimensions,
    /// `(H+1)×(K+1)×M`; constant in `k` and `m` for fixed `h`.
    pub wait: Tensor3,
    /// `H×K×M`.
    pub transplant: Tensor3,
}

impl QFunction {
    pub fn wait_at(&self, h: usize, k: usize, m: usize) -> f64 {
        self.wait.get(h, k, m)
    }

    /// `None` where transplanting is infeasible (`h = H+1` or `k = K+1`).
    pub fn transplant_at(&self, h: usize, k: usize, m: usize) -> Option<f64> {
        if h > self.dims.patient || k > self.dims.kidney {
            None
        } else {
            Some(self.transplant.get(h, k, m))
        }
    }
}

/// Converged value function with aggregates, Q-values, greedy policy, and
/// convergence metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    /// `V(h,k,m)`, shape `(H+1)×(K+1)×M`.
    pub values: Tensor3,
    /// `v(h) = Σ_k K(k|h) Σ_m M(m) V(h,k,m)`, length `H+1`, index `h-1`.
    pub patient_value: Vec<f64>,
    /// `U(h,k) = Σ_m M(m) V(h,k,m)`, shape `(H+1)×(K+1)`.
    pub patient_kidney_value: Mat,
    /// `W(h,m) = Σ_k K(k|h) V(h,k,m)`, shape `(H+1)×M`.
    pub patient_mismatch_value: Mat,
    pub q: QFunction,
    pub policy: Policy,
    pub iterations: usize,
    /// Final sup-norm Bellman residual.
    pub residual: f64,
    /// A-posteriori bound `λ·residual/(1-λ)` on `‖V_computed - V*‖∞`.
    pub error_bound: f64,
    pub converged: bool,
}

/// `v(h)` for an arbitrary value tensor: offers and mismatch integrated out.
pub fn aggregate_patient_value(spec: &ModelSpec, values: &Tensor3) -> Vec<f64> {
    let d = &spec.dims;
    let mut v = vec![0.0; d.death()];
    for h in 1..=d.death() {
        let mut outer = 0.0;
        for k in 1..=d.no_offer() {
            let mut inner = 0.0;
            for m in 1..=d.mismatch {
                inner += spec.mismatch_pmf[m - 1] * values.get(h, k, m);
            }
            outer += spec.offer_pmf.get(h, k) * inner;
        }
        v[h - 1] = outer;
    }
    v
}

/// One-step continuation values `c(h) + λ·Σ v(h')·P(h'|h)` for both kernels.
/// Returns `(wait, fail)`, each length `H+1`, index `h-1`.
fn continuations(spec: &ModelSpec, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = &spec.dims;
    let n = d.death();
    let lambda = spec.discount;
    let mut wait = vec![0.0; n];
    let mut fail = vec![0.0; n];
    for h in 1..=n {
        let c = spec.wait_reward[h - 1];
        let mut dot_wait = 0.0;
        let mut dot_fail = 0.0;
        let wk = spec.wait_kernel.row(h);
        let fk = spec.fail_kernel.row(h);
        for h2 in 0..n {
            dot_wait += v[h2] * wk[h2];
            dot_fail += v[h2] * fk[h2];
        }
        wait[h - 1] = c + lambda * dot_wait;
        fail[h - 1] = c + lambda * dot_fail;
    }
    (wait, fail)
}

fn check_value_shape(spec: &ModelSpec, values: &Tensor3) -> Result<()> {
    let d = &spec.dims;
    let expected = (d.death(), d.no_offer(), d.mismatch);
    if values.extents() != expected {
        return Err(Error::ShapeMismatch(format!(
            "value tensor has extents {:?}, expected {:?}",
            values.extents(),
            expected
        )));
    }
    Ok(())
}

/// Applies the Bellman optimality operator once. The death row of the output
/// is pinned to zero regardless of the input.
pub fn bellman_backup(spec: &ModelSpec, v_in: &Tensor3) -> Result<Tensor3> {
    check_value_shape(spec, v_in)?;
    if !v_in.all_finite() {
        return Err(Error::NonFinite("input value tensor"));
    }
    let d = &spec.dims;
    let v = aggregate_patient_value(spec, v_in);
    let (wait, fail) = continuations(spec, &v);
    let mut out = Tensor3::zeros(d.death(), d.no_offer(), d.mismatch);
    for h in 1..=d.patient {
        let w = wait[h - 1];
        for k in 1..=d.kidney {
            for m in 1..=d.mismatch {
                let f = spec.fail_prob.get(h, k, m);
                let t = (1.0 - f) * spec.transplant_reward.get(h, k, m) + f * fail[h - 1];
                out.set(h, k, m, t.max(w));
            }
        }
        for m in 1..=d.mismatch {
            out.set(h, d.no_offer(), m, w);
        }
    }
    // h = H+1 stays all-zero.
    Ok(out)
}

/// Q-values of both actions under the given (normally converged) values.
pub fn q_values(spec: &ModelSpec, values: &Tensor3) -> Result<QFunction> {
    check_value_shape(spec, values)?;
    if !values.all_finite() {
        return Err(Error::NonFinite("value tensor"));
    }
    let d = &spec.dims;
    let v = aggregate_patient_value(spec, values);
    let (wait, fail) = continuations(spec, &v);
    let mut q_wait = Tensor3::zeros(d.death(), d.no_offer(), d.mismatch);
    let mut q_transplant = Tensor3::zeros(d.patient, d.kidney, d.mismatch);
    for h in 1..=d.patient {
        for k in 1..=d.no_offer() {
            for m in 1..=d.mismatch {
                q_wait.set(h, k, m, wait[h - 1]);
            }
        }
        for k in 1..=d.kidney {
            for m in 1..=d.mismatch {
                let f = spec.fail_prob.get(h, k, m);
                let t = (1.0 - f) * spec.transplant_reward.get(h, k, m) + f * fail[h - 1];
                q_transplant.set(h, k, m, t);
            }
        }
    }
    // Waiting at death is worth zero: the row stays zero.
    Ok(QFunction { dims: *d, wait: q_wait, transplant: q_transplant })
}

/// Greedy policy from a Q-function. Ties (within `tie_tol`) resolve to `T`
/// and are recorded so the optimal-action set can be reported as `{W, T}`.
pub fn greedy_policy(q: &QFunction, tie_tol: f64) -> Policy {
    let d = q.dims;
    let mut policy = Policy::all_wait(d);
    let mut ties = vec![false; d.n_decision_states()];
    let mut idx = 0;
    for h in 1..=d.patient {
        for k in 1..=d.kidney {
            for m in 1..=d.mismatch {
                let qt = q.transplant.get(h, k, m);
                let qw = q.wait.get(h, k, m);
                if qt >= qw - tie_tol {
                    policy.set_action(h, k, m, Action::Transplant);
                }
                ties[idx] = (qt - qw).abs() <= tie_tol;
                idx += 1;
            }
        }
    }
    policy.set_ties(ties);
    policy
}

/// Value iteration from `V_0 ≡ 0` until the sup-norm residual drops to
/// `opts.tol`. Requires `λ < 1`; a run that exhausts `max_iter` comes back
/// with `converged = false` rather than an error.
pub fn solve_value_iteration(spec: &ModelSpec, opts: &SolveOptions) -> Result<Solution> {
    if !spec.discount.is_finite() || spec.discount >= 1.0 {
        return Err(Error::Precondition(format!(
            "value iteration requires discount < 1 (got {}); undiscounted chains are not supported",
            spec.discount
        )));
    }
    if !opts.tol.is_finite() || opts.tol <= 0.0 {
        return Err(Error::Precondition(format!("tol must be positive (got {})", opts.tol)));
    }
    let d = &spec.dims;
    let mut values = Tensor3::zeros(d.death(), d.no_offer(), d.mismatch);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let next = bellman_backup(spec, &values)?;
        residual = next.sup_distance(&values);
        values = next;
        iterations += 1;
        if residual <= opts.tol {
            break;
        }
    }
    let converged = residual <= opts.tol;
    finish_solution(spec, values, iterations, residual, converged, opts.tie_tol)
}

fn finish_solution(
    spec: &ModelSpec,
    values: Tensor3,
    iterations: usize,
    residual: f64,
    converged: bool,
    tie_tol: f64,
) -> Result<Solution> {
    let d = &spec.dims;
    let q = q_values(spec, &values)?;
    let policy = greedy_policy(&q, tie_tol);
    let patient_value = aggregate_patient_value(spec, &values);

    let mut patient_kidney_value = Mat::zeros(d.death(), d.no_offer());
    let mut patient_mismatch_value = Mat::zeros(d.death(), d.mismatch);
    for h in 1..=d.death() {
        for k in 1..=d.no_offer() {
            let mut u = 0.0;
            for m in 1..=d.mismatch {
                u += spec.mismatch_pmf[m - 1] * values.get(h, k, m);
            }
            patient_kidney_value.set(h, k, u);
        }
        for m in 1..=d.mismatch {
            let mut w = 0.0;
            for k in 1..=d.no_offer() {
                w += spec.offer_pmf.get(h, k) * values.get(h, k, m);
            }
            patient_mismatch_value.set(h, m, w);
        }
    }

    let error_bound = spec.discount * residual / (1.0 - spec.discount);
    Ok(Solution {
        values,
        patient_value,
        patient_kidney_value,
        patient_mismatch_value,
        q,
        policy,
        iterations,
        residual,
        error_bound,
        converged,
    })
}

/// Exact evaluation of a stationary policy: fixed point of the
/// policy-restricted backup (the max replaced by the policy's action).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyValue {
    pub values: Tensor3,
    pub iterations: usize,
    pub residual: f64,
    pub error_bound: f64,
    pub converged: bool,
}

pub fn evaluate_policy(
    spec: &ModelSpec,
    policy: &Policy,
    tol: f64,
    max_iter: usize,
) -> Result<PolicyValue> {
    if !spec.discount.is_finite() || spec.discount >= 1.0 {
        return Err(Error::Precondition(format!(
            "policy evaluation requires discount < 1 (got {})",
            spec.discount
        )));
    }
    if policy.dims() != &spec.dims {
        return Err(Error::ShapeMismatch("policy dimensions do not match the model".to_string()));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::Precondition(format!("tol must be positive (got {tol})")));
    }
    let d = &spec.dims;
    let mut values = Tensor3::zeros(d.death(), d.no_offer(), d.mismatch);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        let v = aggregate_patient_value(spec, &values);
        let (wait, fail) = continuations(spec, &v);
        let mut next = Tensor3::zeros(d.death(), d.no_offer(), d.mismatch);
        for h in 1..=d.patient {
            let w = wait[h - 1];
            for k in 1..=d.kidney {
                for m in 1..=d.mismatch {
                    let val = match policy.action(h, k, m) {
                        Action::Wait => w,
                        Action::Transplant => {
                            let f = spec.fail_prob.get(h, k, m);
                            (1.0 - f) * spec.transplant_reward.get(h, k, m) + f * fail[h - 1]
                        }
                    };
                    next.set(h, k, m, val);
                }
            }
            for m in 1..=d.mismatch {
                next.set(h, d.no_offer(), m, w);
            }
        }
        residual = next.sup_distance(&values);
        values = next;
        iterations += 1;
        if residual <= tol {
            break;
        }
    }
    let converged = residual <= tol;
    let error_bound = spec.discount * residual / (1.0 - spec.discount);
    Ok(PolicyValue { values, iterations, residual, error_bound, converged })
}
