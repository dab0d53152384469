//! Value iteration vs brute-force policy enumeration on small random models.

mod common;

use kidney_mdp::generate::random_general_spec;
use kidney_mdp::{solve_value_iteration, Dimensions, SolveOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn value_iteration_matches_policy_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let opts = SolveOptions { tol: 1e-10, max_iter: 500_000, tie_tol: 1e-9 };
    for case in 0..8 {
        let spec = random_general_spec(&mut rng, Dimensions::new(3, 2, 2), 0.9);
        let sol = solve_value_iteration(&spec, &opts).unwrap();
        assert!(sol.converged);
        let oracle = common::oracle_optimal_value(&spec, 1e-12);
        let gap = sol.values.sup_distance(&oracle);
        assert!(gap <= 1e-8, "case {case}: solver vs enumeration gap {gap}");
    }
}

#[test]
fn greedy_policy_attains_the_enumeration_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let opts = SolveOptions::default();
    let spec = random_general_spec(&mut rng, Dimensions::new(2, 2, 2), 0.9);
    let sol = solve_value_iteration(&spec, &opts).unwrap();
    let mask = common::accept_mask(&sol.policy);
    let greedy_value = common::oracle_policy_value(&spec, &mask, 1e-12);
    let oracle = common::oracle_optimal_value(&spec, 1e-12);
    assert!(greedy_value.sup_distance(&oracle) <= 1e-8);
}
