//! Verifies monotonicity of a converged value function: `V` nonincreasing in
//! patient state, kidney state, and mismatch level, and the aggregate `v(h)`
//! nonincreasing. Violations no larger than twice the solver error bound are
//! treated as within tolerance.

use serde::{Deserialize, Serialize};

use crate::solver::Solution;
use crate::tensor::Tensor3;

/// Result for one axis. The witness holds the coordinates of the state whose
/// successor along the axis exceeds it by more than the tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxisCheck {
    pub pass: bool,
    /// Largest observed increase along the axis (0 when perfectly monotone).
    pub worst_violation: f64,
    pub witness: Option<(usize, usize, usize)>,
}

impl AxisCheck {
    fn new() -> Self {
        Self { pass: true, worst_violation: 0.0, witness: None }
    }

    fn observe(&mut self, lo: f64, hi: f64, at: (usize, usize, usize), tol: f64) {
        // Monotone means hi <= lo; an increase of hi - lo > tol is a failure.
        let increase = hi - lo;
        if increase > self.worst_violation {
            self.worst_violation = increase;
        }
        if increase > tol && self.pass {
            self.pass = false;
            self.witness = Some(at);
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub patient: AxisCheck,
    pub kidney: AxisCheck,
    pub mismatch: AxisCheck,
    /// Monotonicity of the aggregate `v(h)`.
    pub aggregate: AxisCheck,
    pub tolerance: f64,
}

impl MonotonicityReport {
    pub fn all_pass(&self) -> bool {
        self.patient.pass && self.kidney.pass && self.mismatch.pass && self.aggregate.pass
    }
}

/// Checks a converged [`Solution`] with tolerance `2 × error_bound`.
pub fn verify_value_monotonicity(sol: &Solution) -> MonotonicityReport {
    verify_value_monotonicity_with(&sol.values, &sol.patient_value, 2.0 * sol.error_bound)
}

/// Same check against an arbitrary value tensor and aggregate, for callers
/// that build them directly.
pub fn verify_value_monotonicity_with(
    values: &Tensor3,
    patient_value: &[f64],
    tolerance: f64,
) -> MonotonicityReport {
    let (nh, nk, nm) = values.extents();
    let n_real_kidney = nk - 1;

    let mut patient = AxisCheck::new();
    for h in 1..nh {
        for k in 1..=nk {
            for m in 1..=nm {
                patient.observe(
                    values.get(h, k, m),
                    values.get(h + 1, k, m),
                    (h, k, m),
                    tolerance,
                );
            }
        }
    }

    let mut kidney = AxisCheck::new();
    for h in 1..=nh {
        for m in 1..=nm {
            for k in 1..n_real_kidney {
                kidney.observe(
                    values.get(h, k, m),
                    values.get(h, k + 1, m),
                    (h, k, m),
                    tolerance,
                );
            }
            // The no-offer column must sit below every real-kidney value.
            for k in 1..=n_real_kidney {
                kidney.observe(
                    values.get(h, k, m),
                    values.get(h, nk, m),
                    (h, k, m),
                    tolerance,
                );
            }
        }
    }

    let mut mismatch = AxisCheck::new();
    for h in 1..=nh {
        for k in 1..=nk {
            for m in 1..nm {
                mismatch.observe(
                    values.get(h, k, m),
                    values.get(h, k, m + 1),
                    (h, k, m),
                    tolerance,
                );
            }
        }
    }

    let mut aggregate = AxisCheck::new();
    for h in 1..patient_value.len() {
        aggregate.observe(patient_value[h - 1], patient_value[h], (h, 0, 0), tolerance);
    }

    MonotonicityReport { patient, kidney, mismatch, aggregate, tolerance }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_tensor_passes_trivially() {
        let values = Tensor3::zeros(3, 2, 2);
        let rep = verify_value_monotonicity_with(&values, &[0.0; 3], 0.0);
        assert!(rep.all_pass());
    }

    #[test]
    fn single_inverted_pair_is_caught_with_witness() {
        let mut values = Tensor3::zeros(3, 2, 2);
        // Monotone baseline decreasing in h.
        for h in 1..=3 {
            for k in 1..=2 {
                for m in 1..=2 {
                    values.set(h, k, m, 3.0 - h as f64);
                }
            }
        }
        values.set(2, 1, 1, 2.5); // now V(2,1,1) > V(1,1,1)
        let rep = verify_value_monotonicity_with(&values, &[2.0, 1.5, 0.0], 1e-9);
        assert!(!rep.patient.pass);
        assert_eq!(rep.patient.witness, Some((1, 1, 1)));
        assert!((rep.patient.worst_violation - 0.5).abs() < 1e-12);
    }

    #[test]
    fn violations_within_tolerance_pass() {
        let mut values = Tensor3::zeros(2, 2, 1);
        values.set(1, 1, 1, 1.0);
        values.set(2, 1, 1, 1.0 + 5e-11); // tiny inversion
        let rep = verify_value_monotonicity_with(&values, &[1.0, 1.0], 2e-10);
        assert!(rep.patient.pass);
        assert!(rep.patient.worst_violation > 0.0);
    }
}
