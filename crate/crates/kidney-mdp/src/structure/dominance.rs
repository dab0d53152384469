//! Value dominance between two models that differ in one component family.
//!
//! Offer mode: if the two models share everything except the offer pmf and
//! `K1 ⪰st K2` row-wise, then `V1 >= V2` pointwise. Transition mode: same
//! with the wait/fail kernel pair and `H1 ⪰st H2`, `Q1 ⪰st Q2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::solver::Solution;
use crate::structure::orders::{check_stochastic_order, OrderCheck};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DominanceMode {
    /// Models differ only in the offer pmf.
    Offer,
    /// Models differ only in the wait and post-failure kernels.
    Transition,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominanceReport {
    pub mode: DominanceMode,
    /// Stochastic-order checks backing the hypothesis, by component name.
    pub hypothesis: Vec<(String, OrderCheck)>,
    pub hypothesis_pass: bool,
    /// Pointwise `V1 >= V2` within the combined solver tolerance.
    pub conclusion_pass: bool,
    pub conclusion_witness: Option<(usize, usize, usize, f64, f64)>,
    /// Combined slack `2·(error_bound1 + error_bound2)`.
    pub tolerance: f64,
}

impl DominanceReport {
    pub fn pass(&self) -> bool {
        self.hypothesis_pass && self.conclusion_pass
    }
}

fn require_equal(field: &str, equal: bool) -> Result<()> {
    if equal {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "dominance comparison requires identical {field} in both models"
        )))
    }
}

/// Verifies the dominance hypothesis for `mode` and then the pointwise value
/// ordering `V1 >= V2 - 2·(eb1 + eb2)`.
///
/// Rejects model pairs that differ in any component other than the ones the
/// mode varies, and unconverged solutions.
pub fn compare_dominance(
    spec1: &ModelSpec,
    spec2: &ModelSpec,
    sol1: &Solution,
    sol2: &Solution,
    mode: DominanceMode,
) -> Result<DominanceReport> {
    require_equal("dimensions", spec1.dims == spec2.dims)?;
    require_equal("discount factor", spec1.discount == spec2.discount)?;
    require_equal("mismatch pmf", spec1.mismatch_pmf == spec2.mismatch_pmf)?;
    require_equal("failure probabilities", spec1.fail_prob == spec2.fail_prob)?;
    require_equal("wait rewards", spec1.wait_reward == spec2.wait_reward)?;
    require_equal("transplant rewards", spec1.transplant_reward == spec2.transplant_reward)?;
    match mode {
        DominanceMode::Offer => {
            require_equal("wait kernel", spec1.wait_kernel == spec2.wait_kernel)?;
            require_equal("fail kernel", spec1.fail_kernel == spec2.fail_kernel)?;
        }
        DominanceMode::Transition => {
            require_equal("offer pmf", spec1.offer_pmf == spec2.offer_pmf)?;
        }
    }
    for (name, sol) in [("first", sol1), ("second", sol2)] {
        if !sol.converged {
            return Err(Error::NotConverged {
                iterations: sol.iterations,
                residual: sol.residual,
            })
            .map_err(|e| Error::Precondition(format!("{name} solution not converged: {e}")));
        }
    }

    let hypothesis = match mode {
        DominanceMode::Offer => vec![(
            "offer_pmf".to_string(),
            check_stochastic_order(&spec1.offer_pmf, &spec2.offer_pmf)?,
        )],
        DominanceMode::Transition => vec![
            (
                "wait_kernel".to_string(),
                check_stochastic_order(&spec1.wait_kernel, &spec2.wait_kernel)?,
            ),
            (
                "fail_kernel".to_string(),
                check_stochastic_order(&spec1.fail_kernel, &spec2.fail_kernel)?,
            ),
        ],
    };
    let hypothesis_pass = hypothesis.iter().all(|(_, c)| c.pass);

    let tolerance = 2.0 * (sol1.error_bound + sol2.error_bound);
    let mut conclusion_pass = true;
    let mut conclusion_witness = None;
    for (h, k, m, v1) in sol1.values.iter() {
        let v2 = sol2.values.get(h, k, m);
        if v1 < v2 - tolerance {
            conclusion_pass = false;
            conclusion_witness = Some((h, k, m, v1, v2));
            break;
        }
    }

    Ok(DominanceReport {
        mode,
        hypothesis,
        hypothesis_pass,
        conclusion_pass,
        conclusion_witness,
        tolerance,
    })
}
