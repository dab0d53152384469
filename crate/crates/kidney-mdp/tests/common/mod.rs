//! Shared test helpers: a brute-force oracle that enumerates every stationary
//! policy and evaluates each one by its own fixed-point iteration. The
//! arithmetic here is written directly against the model tables and stays
//! independent of the library's solver path.
//!
//! Each integration-test target compiles its own copy, so not every helper
//! is used from every target.
#![allow(dead_code)]

use kidney_mdp::{Action, ModelSpec, Policy, Tensor3};
use rayon::prelude::*;

/// Exact value of one policy: fixed-point iteration of the policy-restricted
/// one-step equations, from zero, until the sup-norm residual drops to `tol`.
pub fn oracle_policy_value(spec: &ModelSpec, accepts: &[bool], tol: f64) -> Tensor3 {
    let d = &spec.dims;
    let (nh, nk, nm) = (d.death(), d.no_offer(), d.mismatch);
    let mut f = Tensor3::zeros(nh, nk, nm);
    loop {
        // Aggregate v(h) under the current iterate.
        let mut v = vec![0.0; nh];
        for h in 1..=nh {
            let mut acc = 0.0;
            for k in 1..=nk {
                let mut inner = 0.0;
                for m in 1..=nm {
                    inner += spec.mismatch_pmf[m - 1] * f.get(h, k, m);
                }
                acc += spec.offer_pmf.get(h, k) * inner;
            }
            v[h - 1] = acc;
        }
        let mut next = Tensor3::zeros(nh, nk, nm);
        let mut residual = 0.0_f64;
        for h in 1..=d.patient {
            let mut wait_dot = 0.0;
            let mut fail_dot = 0.0;
            for h2 in 1..=nh {
                wait_dot += v[h2 - 1] * spec.wait_kernel.get(h, h2);
                fail_dot += v[h2 - 1] * spec.fail_kernel.get(h, h2);
            }
            let wait = spec.wait_reward[h - 1] + spec.discount * wait_dot;
            let fail_cont = spec.wait_reward[h - 1] + spec.discount * fail_dot;
            for k in 1..=d.kidney {
                for m in 1..=nm {
                    let idx = ((h - 1) * d.kidney + (k - 1)) * nm + (m - 1);
                    let val = if accepts[idx] {
                        let fp = spec.fail_prob.get(h, k, m);
                        (1.0 - fp) * spec.transplant_reward.get(h, k, m) + fp * fail_cont
                    } else {
                        wait
                    };
                    next.set(h, k, m, val);
                    residual = residual.max((val - f.get(h, k, m)).abs());
                }
            }
            for m in 1..=nm {
                next.set(h, nk, m, wait);
                residual = residual.max((wait - f.get(h, nk, m)).abs());
            }
        }
        f = next;
        if residual <= tol {
            return f;
        }
    }
}

/// Pointwise maximum over all `2^n` stationary policies, each evaluated
/// exactly. Only practical for tiny models.
pub fn oracle_optimal_value(spec: &ModelSpec, tol: f64) -> Tensor3 {
    let d = &spec.dims;
    let n_cells = d.patient * d.kidney * d.mismatch;
    assert!(n_cells <= 16, "brute force limited to 2^16 policies");
    let (nh, nk, nm) = (d.death(), d.no_offer(), d.mismatch);

    let best = (0u32..1 << n_cells)
        .into_par_iter()
        .map(|mask| {
            let accepts: Vec<bool> = (0..n_cells).map(|i| mask >> i & 1 == 1).collect();
            oracle_policy_value(spec, &accepts, tol)
        })
        .reduce(
            || Tensor3::zeros(nh, nk, nm),
            |mut a, b| {
                for (h, k, m, v) in b.iter() {
                    if v > a.get(h, k, m) {
                        a.set(h, k, m, v);
                    }
                }
                a
            },
        );
    best
}

/// Accept mask of a [`Policy`] in the oracle's cell order.
pub fn accept_mask(policy: &Policy) -> Vec<bool> {
    let d = *policy.dims();
    let mut mask = Vec::with_capacity(d.n_decision_states());
    for h in 1..=d.patient {
        for k in 1..=d.kidney {
            for m in 1..=d.mismatch {
                mask.push(policy.action(h, k, m) == Action::Transplant);
            }
        }
    }
    mask
}
