//! Parameter tables for the two reference experiments: a 70-year-old dialysis
//! patient, six-month decision epochs, EPTS-based patient states 1..16 plus
//! death at 17, four KDPI-based kidney qualities plus no-offer, and seven HLA
//! mismatch levels.

/// Living patient states.
pub const N_PATIENT: usize = 16;
/// Real kidney qualities.
pub const N_KIDNEY: usize = 4;
/// Mismatch levels (0..6 HLA antigen mismatches).
pub const N_MISMATCH: usize = 7;

pub const DISCOUNT: f64 = 0.99;
/// Per-epoch reward for staying alive (half a year).
pub const WAIT_REWARD: f64 = 0.5;
/// Base per-epoch death probability (`a` in `a + b(h-1)`).
pub const BASE_DEATH_PROB: f64 = 0.01;
/// Death-probability slope `b` for experiment 1.
pub const DEATH_SLOPE_EXP1: f64 = 0.007;
/// Death-probability slope `b` for experiment 2.
pub const DEATH_SLOPE_EXP2: f64 = 0.006;

/// Offer-state pmf over k = 1..5 (5 = no offer). Sums to 1.0020 as printed;
/// renormalized exactly on load.
pub const OFFER_PMF: [f64; 5] = [0.0491, 0.0323, 0.1206, 0.0347, 0.7653];

/// Mismatch-level pmf over m = 1..7. Sums to 0.9699 as printed; renormalized
/// exactly on load.
pub const MISMATCH_PMF: [f64; 7] = [0.0492, 0.0104, 0.0192, 0.1437, 0.2806, 0.3254, 0.1414];

/// Transplant-failure probability by kidney state; column 0 applies at
/// mismatch level 1 (perfect match), column 1 at every level above 1.
pub const FAIL_PROB: [[f64; 2]; 4] = [
    [0.017, 0.041],
    [0.037, 0.061],
    [0.047, 0.071],
    [0.073, 0.095],
];

/// Post-failure patient state: after a failed transplant the surviving
/// patient jumps deterministically from state `h` to `POST_FAILURE_STATE[h-1]`.
pub const POST_FAILURE_STATE: [usize; 16] = [6, 8, 9, 10, 12, 13, 14, 16, 16, 16, 16, 16, 16, 16, 16, 16];

/// Expected post-transplant survival time (years) at mismatch level 1,
/// by patient state (rows 1..16) and kidney state (columns 1..4).
pub const REWARD_M1: [[f64; 4]; 16] = [
    [12.0, 11.0, 10.0, 8.5],
    [11.0, 11.0, 9.5, 8.2],
    [9.9, 9.7, 9.0, 7.9],
    [9.6, 9.4, 8.8, 7.7],
    [9.3, 9.1, 8.5, 7.6],
    [8.9, 8.8, 8.3, 7.4],
    [8.7, 8.5, 8.0, 7.2],
    [8.5, 8.4, 7.8, 7.1],
    [8.3, 8.1, 7.7, 6.9],
    [8.1, 8.0, 7.5, 6.8],
    [8.1, 8.0, 7.5, 6.8],
    [8.0, 7.9, 7.4, 6.7],
    [7.8, 7.7, 7.3, 6.6],
    [7.7, 7.6, 7.2, 6.6],
    [7.7, 7.6, 7.1, 6.5],
    [7.6, 7.5, 7.1, 6.5],
];

/// Expected post-transplant survival time (years) at mismatch level 7.
/// The source table prints "55" at row 2, column 4; monotonicity across
/// patient states pins that entry into [5.4, 5.5] and it is read as 5.5.
pub const REWARD_M7: [[f64; 4]; 16] = [
    [6.0, 5.9, 5.8, 5.5],
    [5.9, 5.9, 5.8, 5.5],
    [5.8, 5.8, 5.7, 5.4],
    [5.8, 5.7, 5.6, 5.3],
    [5.7, 5.7, 5.6, 5.3],
    [5.6, 5.6, 5.5, 5.2],
    [5.6, 5.6, 5.4, 5.1],
    [5.5, 5.5, 5.3, 5.1],
    [5.5, 5.4, 5.3, 5.0],
    [5.4, 5.4, 5.3, 5.0],
    [5.4, 5.4, 5.3, 5.0],
    [5.4, 5.4, 5.2, 4.9],
    [5.4, 5.3, 5.2, 4.9],
    [5.3, 5.3, 5.1, 4.8],
    [5.3, 5.2, 5.1, 4.8],
    [5.3, 5.2, 5.1, 4.8],
];

/// Five-year post-transplant patient survival rate (fraction), by EPTS band
/// (15 rows) and KDPI band (4 columns).
pub const SURVIVAL_5YR: [[f64; 4]; 15] = [
    [0.875, 0.868, 0.8385, 0.7655],
    [0.86, 0.853, 0.822, 0.7465],
    [0.8375, 0.8305, 0.7975, 0.72],
    [0.824, 0.8175, 0.7835, 0.705],
    [0.8095, 0.803, 0.768, 0.6885],
    [0.793, 0.786, 0.7505, 0.6705],
    [0.776, 0.768, 0.7305, 0.6515],
    [0.7665, 0.7585, 0.7105, 0.6405],
    [0.7445, 0.738, 0.6985, 0.6195],
    [0.7365, 0.727, 0.687, 0.608],
    [0.726, 0.716, 0.6745, 0.596],
    [0.715, 0.704, 0.6615, 0.584],
    [0.706, 0.695, 0.652, 0.575],
    [0.70, 0.688, 0.645, 0.568],
    [0.694, 0.682, 0.638, 0.562],
];

/// Survival-table band for each patient state 1..16. The reward matrices
/// resolve the 16 states onto the 15 EPTS bands by reusing band 10 for
/// states 10 and 11 (their printed reward rows are identical).
pub const STATE_SURVIVAL_BAND: [usize; 16] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 10, 11, 12, 13, 14, 15];

/// Relative risk of the five-year survival outcome by mismatch level.
pub const RELATIVE_RISK: [f64; 7] = [0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.6];
