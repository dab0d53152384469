//! Monte Carlo trajectory simulator for stationary policies.
//!
//! Each trajectory follows the process dynamics: waiting pays `c(h)` and
//! moves the patient by the wait kernel; transplanting succeeds with
//! probability `1 - F(h,k,m)` (terminal reward `r(h,k,m)`) and otherwise pays
//! `c(h)` and moves the patient by the post-failure kernel. After any
//! transition a fresh offer and mismatch level are drawn. Trajectories stop
//! on success, death, or the horizon cap.
//!
//! Determinism: trajectory `i` uses an RNG stream derived from
//! `(seed, i)`, and results are reduced in trajectory order, so parallel and
//! serial runs produce bit-identical estimates.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Action, ModelSpec, Policy, StateIndex};

/// Start state: fixed, or drawn from a weighted distribution per trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum StartState {
    Fixed(StateIndex),
    Weighted(Vec<(StateIndex, f64)>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_trajectories: usize,
    /// Maximum epochs per trajectory; the residual discounted tail is
    /// reported as `bias_bound`.
    pub horizon_cap: usize,
    pub seed: u64,
    pub start: StartState,
    /// Record a per-epoch log for every trajectory (costly; off by default).
    pub log_trajectories: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_trajectories: 100_000,
            horizon_cap: 4_000,
            seed: 0,
            start: StartState::Fixed(StateIndex::new(1, 1, 1)),
            log_trajectories: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationKind {
    Success,
    Death,
    Capped,
}

/// One logged epoch: state, action, outcome event, and the discounted reward
/// added at that epoch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub epoch: usize,
    pub h: usize,
    pub k: usize,
    pub m: usize,
    pub action: Action,
    pub event: String,
    pub reward: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub n: usize,
    /// Sample mean of the discounted returns.
    pub mean: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    pub success_rate: f64,
    pub death_rate: f64,
    pub capped_rate: f64,
    /// Upper bound `λ^cap · max(r_max, c_max) / (1-λ)` on the truncation bias.
    pub bias_bound: f64,
    pub horizon_cap: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<Vec<Vec<TrajectoryRecord>>>,
}

fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Draws an index `1..=probs.len()` from a categorical row.
fn sample_index(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i + 1;
        }
    }
    // Rounding left the draw past the accumulated mass; take the last
    // positive entry.
    probs.iter().rposition(|&p| p > 0.0).map_or(probs.len(), |i| i + 1)
}

struct TrajectoryOutcome {
    ret: f64,
    kind: TerminationKind,
    log: Option<Vec<TrajectoryRecord>>,
}

fn run_trajectory(
    spec: &ModelSpec,
    policy: &Policy,
    cfg: &SimConfig,
    index: u64,
) -> Result<TrajectoryOutcome> {
    let d = &spec.dims;
    let mut rng = trajectory_rng(cfg.seed, index);
    let mut log = cfg.log_trajectories.then(Vec::new);

    let start = match &cfg.start {
        StartState::Fixed(s) => *s,
        StartState::Weighted(options) => {
            let weights: Vec<f64> = options.iter().map(|(_, w)| *w).collect();
            let i = sample_index(&mut rng, &weights);
            options[i - 1].0
        }
    };
    let (mut h, mut k, mut m) = (start.h, start.k, start.m);

    let mut ret = 0.0;
    let mut disc = 1.0;
    let mut epoch = 0;
    loop {
        if h == d.death() {
            return Ok(TrajectoryOutcome { ret, kind: TerminationKind::Death, log });
        }
        if epoch >= cfg.horizon_cap {
            return Ok(TrajectoryOutcome { ret, kind: TerminationKind::Capped, log });
        }
        let state = StateIndex::new(h, k, m);
        let action = policy.action(h, k, m);
        if action == Action::Transplant && !state.can_transplant(d) {
            return Err(Error::Precondition(format!(
                "policy chose T at infeasible state ({h},{k},{m})"
            )));
        }
        let (event, reward, next_h) = match action {
            Action::Transplant => {
                let fail: f64 = rng.random();
                if fail >= spec.fail_prob.get(h, k, m) {
                    let r = disc * spec.transplant_reward.get(h, k, m);
                    ("success", r, None)
                } else {
                    let r = disc * spec.wait_reward[h - 1];
                    let next = sample_index(&mut rng, spec.fail_kernel.row(h));
                    ("failure", r, Some(next))
                }
            }
            Action::Wait => {
                let r = disc * spec.wait_reward[h - 1];
                let next = sample_index(&mut rng, spec.wait_kernel.row(h));
                ("wait", r, Some(next))
            }
        };
        ret += reward;
        if let Some(rows) = log.as_mut() {
            rows.push(TrajectoryRecord {
                epoch,
                h,
                k,
                m,
                action,
                event: event.to_string(),
                reward,
            });
        }
        match next_h {
            None => return Ok(TrajectoryOutcome { ret, kind: TerminationKind::Success, log }),
            Some(next) => {
                h = next;
                if h == d.death() {
                    return Ok(TrajectoryOutcome { ret, kind: TerminationKind::Death, log });
                }
                k = sample_index(&mut rng, spec.offer_pmf.row(h));
                m = sample_index(&mut rng, &spec.mismatch_pmf);
                disc *= spec.discount;
                epoch += 1;
            }
        }
    }
}

/// Estimates the expected total discounted reward of `policy` from the
/// configured start state by sampling `cfg.n_trajectories` trajectories.
pub fn simulate(spec: &ModelSpec, policy: &Policy, cfg: &SimConfig) -> Result<SimReport> {
    if policy.dims() != &spec.dims {
        return Err(Error::ShapeMismatch(
            "policy dimensions do not match the model".to_string(),
        ));
    }
    if cfg.n_trajectories == 0 {
        return Err(Error::Precondition("n_trajectories must be positive".to_string()));
    }
    match &cfg.start {
        StartState::Fixed(s) => {
            if !s.in_range(&spec.dims) {
                return Err(Error::Precondition(format!("start state {s:?} out of range")));
            }
        }
        StartState::Weighted(options) => {
            if options.is_empty() {
                return Err(Error::Precondition("empty start distribution".to_string()));
            }
            let sum: f64 = options.iter().map(|(_, w)| w).sum();
            if (sum - 1.0).abs() > 1e-9 || options.iter().any(|(s, w)| *w < 0.0 || !s.in_range(&spec.dims))
            {
                return Err(Error::Precondition(
                    "start distribution must be a probability distribution over valid states"
                        .to_string(),
                ));
            }
        }
    }

    let outcomes: Vec<Result<TrajectoryOutcome>> = (0..cfg.n_trajectories as u64)
        .into_par_iter()
        .map(|i| run_trajectory(spec, policy, cfg, i))
        .collect();

    let mut returns = Vec::with_capacity(cfg.n_trajectories);
    let mut counts = [0usize; 3];
    let mut logs = cfg.log_trajectories.then(Vec::new);
    for outcome in outcomes {
        let o = outcome?;
        returns.push(o.ret);
        counts[match o.kind {
            TerminationKind::Success => 0,
            TerminationKind::Death => 1,
            TerminationKind::Capped => 2,
        }] += 1;
        if let (Some(all), Some(one)) = (logs.as_mut(), o.log) {
            all.push(one);
        }
    }

    let n = returns.len();
    let mean = returns.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        returns.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let std_error = (var / n as f64).sqrt();

    let max_reward = spec
        .transplant_reward
        .max_abs()
        .max(spec.wait_reward.iter().fold(0.0_f64, |a, &c| a.max(c)));
    let bias_bound = if spec.discount < 1.0 {
        spec.discount.powi(cfg.horizon_cap as i32) * max_reward / (1.0 - spec.discount)
    } else {
        f64::INFINITY
    };

    Ok(SimReport {
        n,
        mean,
        std_error,
        success_rate: counts[0] as f64 / n as f64,
        death_rate: counts[1] as f64 / n as f64,
        capped_rate: counts[2] as f64 / n as f64,
        bias_bound,
        horizon_cap: cfg.horizon_cap,
        seed: cfg.seed,
        log: logs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dimensions;
    use crate::tensor::{Mat, Tensor3};

    /// One living state that dies immediately under waiting.
    fn certain_death_spec() -> ModelSpec {
        ModelSpec {
            dims: Dimensions::new(1, 1, 1),
            discount: 0.9,
            wait_kernel: Mat::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]),
            fail_kernel: Mat::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]),
            offer_pmf: Mat::from_rows(&[vec![0.5, 0.5], vec![0.0, 1.0]]),
            mismatch_pmf: vec![1.0],
            fail_prob: Tensor3::zeros(2, 1, 1),
            wait_reward: vec![0.75, 0.0],
            transplant_reward: Tensor3::try_from(vec![vec![vec![3.0]], vec![vec![0.0]]]).unwrap(),
        }
    }

    #[test]
    fn deterministic_death_gives_exact_return_and_zero_error() {
        let spec = certain_death_spec();
        let policy = Policy::all_wait(spec.dims);
        let cfg = SimConfig {
            n_trajectories: 500,
            start: StartState::Fixed(StateIndex::new(1, 1, 1)),
            ..SimConfig::default()
        };
        let rep = simulate(&spec, &policy, &cfg).unwrap();
        assert_eq!(rep.mean, 0.75);
        assert_eq!(rep.std_error, 0.0);
        assert_eq!(rep.death_rate, 1.0);
    }

    #[test]
    fn termination_fractions_sum_to_one() {
        let spec = certain_death_spec();
        let policy = Policy::all_wait(spec.dims);
        let rep = simulate(
            &spec,
            &policy,
            &SimConfig { n_trajectories: 100, ..SimConfig::default() },
        )
        .unwrap();
        assert!((rep.success_rate + rep.death_rate + rep.capped_rate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn same_seed_replays_bit_identically() {
        let spec = crate::experiments::build_experiment_model(crate::experiments::Experiment::Exp1);
        let sol =
            crate::solver::solve_value_iteration(&spec, &crate::solver::SolveOptions::default())
                .unwrap();
        let cfg = SimConfig {
            n_trajectories: 2_000,
            seed: 7,
            start: StartState::Fixed(StateIndex::new(1, 5, 1)),
            ..SimConfig::default()
        };
        let a = simulate(&spec, &sol.policy, &cfg).unwrap();
        let b = simulate(&spec, &sol.policy, &cfg).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        assert_eq!(a.success_rate, b.success_rate);
    }

    #[test]
    fn no_failure_transplants_match_exact_policy_value() {
        // F ≡ 0 and always-transplant-when-available: every transplant event
        // contributes exactly r at its epoch.
        let mut spec = certain_death_spec();
        spec.wait_kernel = Mat::from_rows(&[vec![0.6, 0.4], vec![0.0, 1.0]]);
        spec.fail_kernel = spec.wait_kernel.clone();
        let policy = Policy::from_fn(spec.dims, |_, _, _| Action::Transplant);
        let exact = crate::solver::evaluate_policy(&spec, &policy, 1e-12, 100_000).unwrap();
        let cfg = SimConfig {
            n_trajectories: 60_000,
            seed: 3,
            start: StartState::Fixed(StateIndex::new(1, 2, 1)),
            ..SimConfig::default()
        };
        let rep = simulate(&spec, &policy, &cfg).unwrap();
        let exact_v = exact.values.get(1, 2, 1);
        assert!(
            (rep.mean - exact_v).abs() <= 3.0 * rep.std_error.max(1e-6),
            "estimate {} vs exact {exact_v} (se {})",
            rep.mean,
            rep.std_error
        );
    }

    #[test]
    fn error_shrinks_with_sample_size() {
        let spec = certain_death_spec();
        let mut spec = spec;
        spec.wait_kernel = Mat::from_rows(&[vec![0.7, 0.3], vec![0.0, 1.0]]);
        spec.fail_kernel = spec.wait_kernel.clone();
        let policy = Policy::all_wait(spec.dims);
        let small = simulate(
            &spec,
            &policy,
            &SimConfig { n_trajectories: 1_000, seed: 11, ..SimConfig::default() },
        )
        .unwrap();
        let large = simulate(
            &spec,
            &policy,
            &SimConfig { n_trajectories: 100_000, seed: 11, ..SimConfig::default() },
        )
        .unwrap();
        // Standard error scales like 1/sqrt(n): ratio should be near 10.
        let ratio = small.std_error / large.std_error;
        assert!((5.0..20.0).contains(&ratio), "se ratio {ratio}");
        let exact = crate::solver::evaluate_policy(&spec, &policy, 1e-12, 100_000)
            .unwrap()
            .values
            .get(1, 1, 1);
        assert!((large.mean - exact).abs() <= 4.0 * large.std_error);
    }

    #[test]
    fn weighted_start_and_logging_work() {
        let spec = certain_death_spec();
        let policy = Policy::all_wait(spec.dims);
        let cfg = SimConfig {
            n_trajectories: 50,
            log_trajectories: true,
            start: StartState::Weighted(vec![
                (StateIndex::new(1, 1, 1), 0.5),
                (StateIndex::new(1, 2, 1), 0.5),
            ]),
            ..SimConfig::default()
        };
        let rep = simulate(&spec, &policy, &cfg).unwrap();
        let log = rep.log.unwrap();
        assert_eq!(log.len(), 50);
        assert!(log.iter().all(|t| t.len() == 1 && t[0].event == "wait"));
    }

    #[test]
    fn bad_start_state_rejected() {
        let spec = certain_death_spec();
        let policy = Policy::all_wait(spec.dims);
        let cfg = SimConfig {
            start: StartState::Fixed(StateIndex::new(9, 1, 1)),
            n_trajectories: 1,
            ..SimConfig::default()
        };
        assert!(matches!(simulate(&spec, &policy, &cfg), Err(Error::Precondition(_))));
    }
}
