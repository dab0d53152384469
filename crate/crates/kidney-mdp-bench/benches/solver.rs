use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kidney_mdp::experiments::{build_experiment_model, Experiment};
use kidney_mdp::generate::{random_structured_spec, StructuredSpecConfig};
use kidney_mdp::sim::{simulate, SimConfig, StartState};
use kidney_mdp::tensor::Tensor3;
use kidney_mdp::{bellman_backup, solve_value_iteration, SolveOptions, StateIndex};

fn bench_backup(c: &mut Criterion) {
    let spec = build_experiment_model(Experiment::Exp1);
    let d = spec.dims;
    let values = Tensor3::zeros(d.death(), d.no_offer(), d.mismatch);
    c.bench_function("bellman_backup_exp1", |b| {
        b.iter(|| black_box(bellman_backup(&spec, black_box(&values)).unwrap()))
    });
}

fn bench_solve(c: &mut Criterion) {
    let spec = build_experiment_model(Experiment::Exp1);
    let opts = SolveOptions::default();
    c.bench_function("solve_exp1_tol_1e-10", |b| {
        b.iter(|| black_box(solve_value_iteration(&spec, &opts).unwrap()))
    });

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let random = random_structured_spec(&mut rng, &StructuredSpecConfig::default());
    c.bench_function("solve_random_structured", |b| {
        b.iter(|| black_box(solve_value_iteration(&random, &opts).unwrap()))
    });
}

fn bench_simulate(c: &mut Criterion) {
    let spec = build_experiment_model(Experiment::Exp1);
    let sol = solve_value_iteration(&spec, &SolveOptions::default()).unwrap();
    let cfg = SimConfig {
        n_trajectories: 10_000,
        horizon_cap: 4_000,
        seed: 0,
        start: StartState::Fixed(StateIndex::new(1, 5, 1)),
        log_trajectories: false,
    };
    c.bench_function("simulate_exp1_10k_trajectories", |b| {
        b.iter(|| black_box(simulate(&spec, &sol.policy, &cfg).unwrap()))
    });
}

criterion_group!(benches, bench_backup, bench_solve, bench_simulate);
criterion_main!(benches);
