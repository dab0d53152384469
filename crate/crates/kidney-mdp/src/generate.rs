//! Random model generators for property tests and benchmarks.
//!
//! [`random_structured_spec`] builds models satisfying assumptions A1–A6 by
//! construction: rewards and failure probabilities are sums of per-axis
//! monotone profiles, kernels are IFR because each row is produced by pushing
//! mass upward from the previous row, the post-failure kernel mixes the wait
//! kernel with extra death hazard (which preserves IFR and is stochastically
//! dominated), and the offer pmf scales a base distribution down in the
//! patient state. With `constant_in_h = true` the rewards and failure
//! probabilities are flat across living patient states, which additionally
//! yields A7–A9.

use rand::Rng;

use crate::model::{Dimensions, ModelSpec};
use crate::tensor::{Mat, Tensor3};

/// Ranges for [`random_structured_spec`].
#[derive(Debug, Clone)]
pub struct StructuredSpecConfig {
    pub patient_range: (usize, usize),
    pub kidney_range: (usize, usize),
    pub mismatch_range: (usize, usize),
    pub discount_range: (f64, f64),
    /// Make rewards and failure probabilities independent of the living
    /// patient state (gives A8 for free and A9 via IFR).
    pub constant_in_h: bool,
}

impl Default for StructuredSpecConfig {
    fn default() -> Self {
        Self {
            patient_range: (3, 6),
            kidney_range: (2, 4),
            mismatch_range: (2, 4),
            discount_range: (0.85, 0.95),
            constant_in_h: false,
        }
    }
}

fn random_pmf<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

/// Nonincreasing nonnegative profile of length `n` starting at `start`.
fn nonincreasing_profile<R: Rng>(rng: &mut R, n: usize, start: f64, max_step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut x = start;
    for _ in 0..n {
        out.push(x);
        x = (x - rng.random_range(0.0..max_step)).max(0.0);
    }
    out
}

/// Moves a random share of each entry's mass to higher indices within
/// `1..=n`, leaving the row stochastic and stochastically worse.
fn push_mass_up<R: Rng>(rng: &mut R, row: &[f64]) -> Vec<f64> {
    let n = row.len();
    let mut out = row.to_vec();
    for j in 0..n - 1 {
        let share = rng.random_range(0.0..0.5);
        let moved = out[j] * share;
        out[j] -= moved;
        let target = rng.random_range(j + 1..n);
        out[target] += moved;
    }
    out
}

/// Random model satisfying A1–A6 (and A7–A9 when `constant_in_h`) by
/// construction, suitable for the control-limit and dominance property tests.
pub fn random_structured_spec<R: Rng>(rng: &mut R, cfg: &StructuredSpecConfig) -> ModelSpec {
    let dims = Dimensions::new(
        rng.random_range(cfg.patient_range.0..=cfg.patient_range.1),
        rng.random_range(cfg.kidney_range.0..=cfg.kidney_range.1),
        rng.random_range(cfg.mismatch_range.0..=cfg.mismatch_range.1),
    );
    let nh = dims.death();
    let discount = rng.random_range(cfg.discount_range.0..cfg.discount_range.1);

    // Wait kernel: row 1 random, each later row pushed upward; death absorbing.
    let mut wait_rows: Vec<Vec<f64>> = Vec::with_capacity(nh);
    wait_rows.push(random_pmf(rng, nh));
    for _ in 1..dims.patient {
        let prev = wait_rows.last().unwrap().clone();
        wait_rows.push(push_mass_up(rng, &prev));
    }
    let mut death_row = vec![0.0; nh];
    death_row[nh - 1] = 1.0;
    wait_rows.push(death_row.clone());
    let wait_kernel = Mat::from_rows(&wait_rows);

    // Post-failure kernel: extra death hazard on top of the wait kernel.
    // Tails become (1-beta)·tail + beta, so IFR and domination both carry over.
    let beta = rng.random_range(0.0..0.4);
    let mut fail_rows: Vec<Vec<f64>> = Vec::with_capacity(nh);
    for (i, row) in wait_rows.iter().enumerate() {
        if i + 1 == nh {
            fail_rows.push(death_row.clone());
        } else {
            let mut r: Vec<f64> = row.iter().map(|p| p * (1.0 - beta)).collect();
            r[nh - 1] += beta;
            fail_rows.push(r);
        }
    }
    let fail_kernel = Mat::from_rows(&fail_rows);

    // Offer pmf: base distribution scaled down as the patient worsens.
    let base = random_pmf(rng, dims.kidney);
    let mut scale = rng.random_range(0.3..0.9);
    let mut offer_rows: Vec<Vec<f64>> = Vec::with_capacity(nh);
    for _ in 1..=dims.patient {
        let mut row: Vec<f64> = base.iter().map(|p| p * scale).collect();
        row.push(1.0 - scale);
        offer_rows.push(row);
        scale *= rng.random_range(0.7..1.0);
    }
    let mut no_offer_row = vec![0.0; dims.no_offer()];
    no_offer_row[dims.kidney] = 1.0;
    offer_rows.push(no_offer_row);
    let offer_pmf = Mat::from_rows(&offer_rows);

    let mismatch_pmf = random_pmf(rng, dims.mismatch);

    // Wait reward: nonincreasing, zero at death.
    let c_start = rng.random_range(0.2..1.5);
    let mut wait_reward = if cfg.constant_in_h {
        vec![c_start; nh]
    } else {
        nonincreasing_profile(rng, nh, c_start, 0.15)
    };
    wait_reward[nh - 1] = 0.0;

    // Terminal reward: separable sum of nonincreasing profiles, zero at death.
    let rh_start = rng.random_range(2.0..5.0);
    let rh = if cfg.constant_in_h {
        vec![rh_start; dims.patient]
    } else {
        nonincreasing_profile(rng, dims.patient, rh_start, 0.5)
    };
    let rk_start = rng.random_range(1.0..3.0);
    let rk = nonincreasing_profile(rng, dims.kidney, rk_start, 0.6);
    let rm_start = rng.random_range(1.0..3.0);
    let rm = nonincreasing_profile(rng, dims.mismatch, rm_start, 0.6);
    let base_r = rng.random_range(1.0..3.0);
    let mut transplant_reward = Tensor3::zeros(nh, dims.kidney, dims.mismatch);
    for h in 1..=dims.patient {
        for k in 1..=dims.kidney {
            for m in 1..=dims.mismatch {
                transplant_reward.set(h, k, m, base_r + rh[h - 1] + rk[k - 1] + rm[m - 1]);
            }
        }
    }

    // Failure probability: separable sum of nondecreasing profiles, capped
    // well below 1. Nondecreasing in h includes the stored death row.
    let fh: Vec<f64> = if cfg.constant_in_h {
        vec![0.0; nh]
    } else {
        let mut acc = 0.0;
        (0..nh)
            .map(|_| {
                acc += rng.random_range(0.0..0.04);
                acc
            })
            .collect()
    };
    let f_base = rng.random_range(0.0..0.2);
    let mut fk = Vec::with_capacity(dims.kidney);
    let mut acc = 0.0;
    for _ in 0..dims.kidney {
        fk.push(acc);
        acc += rng.random_range(0.0..0.1);
    }
    let mut fm = Vec::with_capacity(dims.mismatch);
    let mut acc = 0.0;
    for _ in 0..dims.mismatch {
        fm.push(acc);
        acc += rng.random_range(0.0..0.1);
    }
    let mut fail_prob = Tensor3::zeros(nh, dims.kidney, dims.mismatch);
    for h in 1..=nh {
        for k in 1..=dims.kidney {
            for m in 1..=dims.mismatch {
                let f = (f_base + fh[h - 1] + fk[k - 1] + fm[m - 1]).min(0.85);
                fail_prob.set(h, k, m, f);
            }
        }
    }

    ModelSpec {
        dims,
        discount,
        wait_kernel,
        fail_kernel,
        offer_pmf,
        mismatch_pmf,
        fail_prob,
        wait_reward,
        transplant_reward,
    }
}

/// Fully random valid model (no monotone structure), for oracle tests.
pub fn random_general_spec<R: Rng>(rng: &mut R, dims: Dimensions, discount: f64) -> ModelSpec {
    let nh = dims.death();
    let mut death_row = vec![0.0; nh];
    death_row[nh - 1] = 1.0;

    let kernel_rows = |rng: &mut R| -> Vec<Vec<f64>> {
        let mut rows: Vec<Vec<f64>> = (0..dims.patient).map(|_| random_pmf(rng, nh)).collect();
        rows.push(death_row.clone());
        rows
    };
    let wait_kernel = Mat::from_rows(&kernel_rows(rng));
    let fail_kernel = Mat::from_rows(&kernel_rows(rng));

    let mut offer_rows: Vec<Vec<f64>> =
        (0..dims.patient).map(|_| random_pmf(rng, dims.no_offer())).collect();
    let mut no_offer_row = vec![0.0; dims.no_offer()];
    no_offer_row[dims.kidney] = 1.0;
    offer_rows.push(no_offer_row);
    let offer_pmf = Mat::from_rows(&offer_rows);

    let mismatch_pmf = random_pmf(rng, dims.mismatch);

    let mut wait_reward: Vec<f64> = (0..nh).map(|_| rng.random_range(0.0..1.5)).collect();
    wait_reward[nh - 1] = 0.0;

    let mut transplant_reward = Tensor3::zeros(nh, dims.kidney, dims.mismatch);
    let mut fail_prob = Tensor3::zeros(nh, dims.kidney, dims.mismatch);
    for h in 1..=dims.patient {
        for k in 1..=dims.kidney {
            for m in 1..=dims.mismatch {
                transplant_reward.set(h, k, m, rng.random_range(0.0..10.0));
                fail_prob.set(h, k, m, rng.random_range(0.0..0.9));
            }
        }
    }

    ModelSpec {
        dims,
        discount,
        wait_kernel,
        fail_kernel,
        offer_pmf,
        mismatch_pmf,
        fail_prob,
        wait_reward,
        transplant_reward,
    }
}

/// Copy of `spec` whose offer pmf is stochastically worse: real-kidney mass
/// scaled by a factor below one, remainder moved to the no-offer state.
/// Preserves A6 and satisfies the offer-dominance hypothesis by construction.
pub fn degrade_offer<R: Rng>(rng: &mut R, spec: &ModelSpec) -> ModelSpec {
    let mut out = spec.clone();
    let d = spec.dims;
    let shrink = rng.random_range(0.6..0.98);
    for h in 1..=d.patient {
        let mut real_mass = 0.0;
        for k in 1..=d.kidney {
            let p = spec.offer_pmf.get(h, k) * shrink;
            out.offer_pmf.set(h, k, p);
            real_mass += p;
        }
        out.offer_pmf.set(h, d.no_offer(), 1.0 - real_mass);
    }
    out
}

/// Copy of `spec` whose wait and post-failure kernels carry extra death
/// hazard. Both kernels stay IFR, remain dominated by the originals, and the
/// wait kernel still dominates the post-failure kernel.
pub fn degrade_transitions<R: Rng>(rng: &mut R, spec: &ModelSpec) -> ModelSpec {
    let mut out = spec.clone();
    let d = spec.dims;
    let nh = d.death();
    let delta = rng.random_range(0.01..0.25);
    for h in 1..=d.patient {
        for kernel in [&mut out.wait_kernel, &mut out.fail_kernel] {
            let mut live = 0.0;
            for h2 in 1..=d.patient {
                let p = kernel.get(h, h2) * (1.0 - delta);
                kernel.set(h, h2, p);
                live += p;
            }
            kernel.set(h, nh, 1.0 - live);
        }
    }
    out
}
