//! Increasing-failure-rate and stochastic-order checks on transition kernels.
//!
//! Both checks work on tail sums. For a kernel `P` over states `{1..n}`
//! (larger index = worse state):
//!
//! - `P` is IFR when `Σ_{j>=t} P(j|i)` is nondecreasing in `i` for every tail
//!   start `t`.
//! - `P ⪰st Q` when `Σ_{j>=t} P(j|i) <= Σ_{j>=t} Q(j|i)` for every `i, t`,
//!   i.e. `P` keeps less mass on the bad upper states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ROW_SUM_TOL;
use crate::tensor::Mat;

/// Slack absorbing floating-point noise in tail sums; the inequalities are
/// otherwise checked exactly as defined.
pub const ORDER_TOL: f64 = 1e-12;

/// First violated tail inequality: row `row` vs `row+1` (IFR) or the same row
/// of the two kernels (stochastic order), at tail start `tail_start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderWitness {
    pub row: usize,
    pub tail_start: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderCheck {
    pub pass: bool,
    pub witness: Option<OrderWitness>,
}

impl OrderCheck {
    fn pass() -> Self {
        Self { pass: true, witness: None }
    }

    fn fail(row: usize, tail_start: usize, lhs: f64, rhs: f64) -> Self {
        Self { pass: false, witness: Some(OrderWitness { row, tail_start, lhs, rhs }) }
    }
}

fn require_stochastic(name: &str, mat: &Mat) -> Result<()> {
    for i in 1..=mat.rows() {
        let sum: f64 = mat.row(i).iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL || mat.row(i).iter().any(|&p| p < -ROW_SUM_TOL) {
            return Err(Error::Precondition(format!(
                "{name} row {i} is not a probability distribution (sum {sum})"
            )));
        }
    }
    Ok(())
}

/// Checks the IFR property of a square row-stochastic kernel.
///
/// On failure the witness `(row, tail_start)` satisfies
/// `Σ_{j>=tail_start} P(j|row) > Σ_{j>=tail_start} P(j|row+1)`.
pub fn check_ifr(kernel: &Mat) -> Result<OrderCheck> {
    if kernel.rows() != kernel.cols() {
        return Err(Error::ShapeMismatch(format!(
            "IFR check needs a square kernel, got {}x{}",
            kernel.rows(),
            kernel.cols()
        )));
    }
    require_stochastic("kernel", kernel)?;
    let n = kernel.rows();
    let mut prev = kernel.row_tail_sums(1);
    for i in 1..n {
        let next = kernel.row_tail_sums(i + 1);
        for t in 0..n {
            if prev[t] > next[t] + ORDER_TOL {
                return Ok(OrderCheck::fail(i, t + 1, prev[t], next[t]));
            }
        }
        prev = next;
    }
    Ok(OrderCheck::pass())
}

/// Checks `P ⪰st Q` row-wise: every tail sum of `P` bounded by the matching
/// tail sum of `Q`. A single pmf can be passed as a 1-row matrix.
pub fn check_stochastic_order(p: &Mat, q: &Mat) -> Result<OrderCheck> {
    if p.rows() != q.rows() || p.cols() != q.cols() {
        return Err(Error::ShapeMismatch(format!(
            "stochastic-order operands differ: {}x{} vs {}x{}",
            p.rows(),
            p.cols(),
            q.rows(),
            q.cols()
        )));
    }
    require_stochastic("first kernel", p)?;
    require_stochastic("second kernel", q)?;
    for i in 1..=p.rows() {
        let tp = p.row_tail_sums(i);
        let tq = q.row_tail_sums(i);
        for t in 0..p.cols() {
            if tp[t] > tq[t] + ORDER_TOL {
                return Ok(OrderCheck::fail(i, t + 1, tp[t], tq[t]));
            }
        }
    }
    Ok(OrderCheck::pass())
}
