//! Command-line front end: solve models, check assumptions, extract control
//! limits, run dominance and baseline comparisons, simulate policies, and
//! rebuild the reference experiments.
//!
//! Exit codes: 0 success, 2 bad input (schema or shape), 3 non-convergence,
//! 4 precondition violation, 1 other failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use kidney_mdp::experiments::{
    compare_with_baseline, run_comparison, ComparisonOptions, Experiment,
};
use kidney_mdp::io;
use kidney_mdp::sim::{simulate, SimConfig, StartState};
use kidney_mdp::structure::ControlLimitReport;
use kidney_mdp::{
    check_assumptions, compare_dominance, extract_control_limits, solve_value_iteration,
    DominanceMode, Error, ModelSpec, Policy, Solution, SolveOptions, StateIndex,
};

#[derive(Parser)]
#[command(name = "kidney-mdp", version, about = "Kidney-offer acceptance MDP toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct SolverArgs {
    /// Sup-norm residual at which value iteration stops.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Absolute tolerance for treating the two action values as tied.
    #[arg(long, default_value_t = 1e-9)]
    tie_tol: f64,
    /// Iteration cap for all fixed-point computations.
    #[arg(long, default_value_t = 200_000)]
    max_iter: usize,
}

impl SolverArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions { tol: self.tol, max_iter: self.max_iter, tie_tol: self.tie_tol }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CompareMode {
    /// Models differ only in the offer pmf.
    Offer,
    /// Models differ only in the wait/post-failure kernels.
    Transition,
    /// Compare a model against its mismatch-blind baseline.
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Exp1,
    Exp2,
}

impl From<ExperimentArg> for Experiment {
    fn from(e: ExperimentArg) -> Self {
        match e {
            ExperimentArg::Exp1 => Experiment::Exp1,
            ExperimentArg::Exp2 => Experiment::Exp2,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve a model by value iteration and write solution files.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Evaluate the nine structural assumptions on a model.
    Check {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Solve a model and extract its control-limit families.
    Limits {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Dominance comparison between two models, or a baseline comparison.
    Compare {
        #[arg(long, value_enum)]
        mode: CompareMode,
        #[arg(long)]
        input: PathBuf,
        /// Second model (offer/transition modes only).
        #[arg(long)]
        input2: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Average the baseline terminal reward over the failure outcome.
        #[arg(long)]
        baseline_failure_weighted: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Monte Carlo estimate of a policy's value on a model.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Policy JSON; defaults to the solved optimal policy.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Start state as "h,k,m"; defaults to (1, K+1, 1).
        #[arg(long)]
        start: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 4_000)]
        horizon_cap: usize,
        /// Also write a per-epoch trajectory log.
        #[arg(long)]
        log_trajectories: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Rebuild a reference experiment: model, solution, limits, assumptions,
    /// and the baseline comparison.
    Experiment {
        #[arg(value_enum)]
        which: ExperimentArg,
        #[arg(long)]
        out_dir: PathBuf,
        /// Average the baseline terminal reward over the failure outcome.
        #[arg(long)]
        baseline_failure_weighted: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Serialize)]
struct ManifestInput {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    argv: Vec<String>,
    inputs: Vec<ManifestInput>,
    created_unix: u64,
}

fn digest_file(path: &Path) -> std::io::Result<String> {
    let bytes = fs::read(path)?;
    let hash = Sha256::digest(&bytes);
    Ok(hash.iter().map(|b| format!("{b:02x}")).collect())
}

fn write_manifest(out_dir: &Path, command: &str, inputs: &[&Path]) -> anyhow::Result<()> {
    let manifest = Manifest {
        tool: "kidney-mdp",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        argv: std::env::args().collect(),
        inputs: inputs
            .iter()
            .map(|p| {
                Ok(ManifestInput {
                    path: p.display().to_string(),
                    sha256: digest_file(p)?,
                })
            })
            .collect::<std::io::Result<_>>()?,
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs(),
    };
    io::write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(())
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidModel(_)) | Some(Error::Json(_)) | Some(Error::ShapeMismatch(_)) => 2,
        Some(Error::NotConverged { .. }) => 3,
        Some(Error::Precondition(_)) | Some(Error::NonFinite(_)) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Ok(threads) = std::env::var("KIDNEY_MDP_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => log::warn!("ignoring invalid KIDNEY_MDP_THREADS='{threads}'"),
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn solve_converged(spec: &ModelSpec, opts: &SolveOptions) -> anyhow::Result<Solution> {
    let sol = solve_value_iteration(spec, opts)?;
    if !sol.converged {
        return Err(Error::NotConverged { iterations: sol.iterations, residual: sol.residual }
            .into());
    }
    Ok(sol)
}

fn print_limit_summary(report: &ControlLimitReport) {
    let families = [
        ("match-based", &report.match_based),
        ("kidney-based", &report.kidney_based),
        ("patient-based", &report.patient_based),
    ];
    for (name, family) in families {
        if family.exists {
            println!("{name}: exists");
        } else {
            let (c1, c2) = family.witness.unwrap_or((0, 0));
            let coords = match name {
                "match-based" => format!("h={c1}, k={c2}"),
                "kidney-based" => format!("h={c1}, m={c2}"),
                _ => format!("k={c1}, m={c2}"),
            };
            println!(
                "{name}: does not exist (witness {coords}; failing slices {:?})",
                family.failing_slices
            );
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Solve { input, out_dir, solver } => {
            let spec = io::load_model(&input)?;
            let sol = solve_value_iteration(&spec, &solver.options())?;
            fs::create_dir_all(&out_dir)?;
            io::write_json(&out_dir.join("solution.json"), &sol)?;
            io::write_json(&out_dir.join("policy.json"), &sol.policy)?;
            io::write_solution_csv(&out_dir.join("solution.csv"), &spec, &sol)?;
            write_manifest(&out_dir, "solve", &[&input])?;
            println!(
                "solved {} states in {} iterations (residual {:.3e}, error bound {:.3e})",
                spec.dims.n_states(),
                sol.iterations,
                sol.residual,
                sol.error_bound
            );
            if !sol.converged {
                return Err(Error::NotConverged {
                    iterations: sol.iterations,
                    residual: sol.residual,
                }
                .into());
            }
            Ok(())
        }
        Command::Check { input, out_dir } => {
            let spec = io::load_model(&input)?;
            let report = check_assumptions(&spec);
            fs::create_dir_all(&out_dir)?;
            io::write_assumptions_json(&out_dir.join("assumptions.json"), &report)?;
            write_manifest(&out_dir, "check", &[&input])?;
            for check in &report.checks {
                let verdict = if check.pass { "pass" } else { "fail" };
                match &check.witness {
                    Some(w) => println!(
                        "{}: {verdict} ({}; witness {:?}: {} vs {})",
                        check.id, check.description, w.indices, w.lhs, w.rhs
                    ),
                    None => println!("{}: {verdict} ({})", check.id, check.description),
                }
            }
            Ok(())
        }
        Command::Limits { input, out_dir, solver } => {
            let spec = io::load_model(&input)?;
            let sol = solve_converged(&spec, &solver.options())?;
            let report = extract_control_limits(&sol.policy);
            fs::create_dir_all(&out_dir)?;
            io::write_limits_csv(&out_dir.join("limits.csv"), &report, None, None)?;
            io::write_json(&out_dir.join("limits.json"), &report)?;
            write_manifest(&out_dir, "limits", &[&input])?;
            print_limit_summary(&report);
            Ok(())
        }
        Command::Compare { mode, input, input2, out_dir, baseline_failure_weighted, solver } => {
            match mode {
                CompareMode::Baseline => {
                    let spec = io::load_model(&input)?;
                    let opts = ComparisonOptions {
                        tol: solver.tol,
                        max_iter: solver.max_iter,
                        tie_tol: solver.tie_tol,
                        failure_weighted: baseline_failure_weighted,
                    };
                    let report = compare_with_baseline(spec, &opts)?;
                    fs::create_dir_all(&out_dir)?;
                    io::write_json(&out_dir.join("baseline.json"), report.baseline())?;
                    io::write_baseline_csv(&out_dir.join("baseline_solution.csv"), &report)?;
                    io::write_comparison_csv(&out_dir.join("comparison.csv"), &report)?;
                    io::write_json(&out_dir.join("comparison.json"), &report)?;
                    write_manifest(&out_dir, "compare", &[&input])?;
                    println!(
                        "max gap {:.6} at {:?}; min gap {:.3e}",
                        report.max_gap, report.max_gap_state, report.min_gap
                    );
                    if let Some(bracket) = &report.bracket {
                        println!(
                            "baseline curve within optimal m=4/m=5 curves: {}",
                            if bracket.pass { "yes" } else { "no" }
                        );
                    }
                    Ok(())
                }
                CompareMode::Offer | CompareMode::Transition => {
                    let second = input2.ok_or_else(|| {
                        Error::Precondition("--input2 is required for dominance modes".into())
                    })?;
                    let spec1 = io::load_model(&input)?;
                    let spec2 = io::load_model(&second)?;
                    let opts = solver.options();
                    let sol1 = solve_converged(&spec1, &opts)?;
                    let sol2 = solve_converged(&spec2, &opts)?;
                    let dmode = match mode {
                        CompareMode::Offer => DominanceMode::Offer,
                        _ => DominanceMode::Transition,
                    };
                    let report = compare_dominance(&spec1, &spec2, &sol1, &sol2, dmode)?;
                    fs::create_dir_all(&out_dir)?;
                    io::write_json(&out_dir.join("dominance.json"), &report)?;
                    write_manifest(&out_dir, "compare", &[&input, &second])?;
                    println!(
                        "hypothesis: {}; pointwise dominance: {}",
                        if report.hypothesis_pass { "holds" } else { "violated" },
                        if report.conclusion_pass { "holds" } else { "violated" }
                    );
                    if let Some(w) = report.conclusion_witness {
                        println!("dominance witness at (h,k,m)=({},{},{}): {} < {}", w.0, w.1, w.2, w.3, w.4);
                    }
                    Ok(())
                }
            }
        }
        Command::Simulate {
            input,
            out_dir,
            policy,
            start,
            seed,
            n,
            horizon_cap,
            log_trajectories,
            solver,
        } => {
            let spec = io::load_model(&input)?;
            let mut inputs: Vec<&Path> = vec![&input];
            let policy_path = policy.clone();
            let policy: Policy = match &policy_path {
                Some(path) => {
                    inputs.push(path);
                    serde_json::from_str(&fs::read_to_string(path)?).map_err(Error::Json)?
                }
                None => solve_converged(&spec, &solver.options())?.policy,
            };
            let start_state = match start {
                Some(text) => parse_start(&text)?,
                None => StateIndex::new(1, spec.dims.no_offer(), 1),
            };
            let cfg = SimConfig {
                n_trajectories: n,
                horizon_cap,
                seed,
                start: StartState::Fixed(start_state),
                log_trajectories,
            };
            let report = simulate(&spec, &policy, &cfg)?;
            fs::create_dir_all(&out_dir)?;
            if log_trajectories {
                io::write_trajectories_csv(&out_dir.join("trajectories.csv"), &report)?;
            }
            let mut file_report = report;
            let log = file_report.log.take(); // keep simulate.json small
            drop(log);
            io::write_json(&out_dir.join("simulate.json"), &file_report)?;
            write_manifest(&out_dir, "simulate", &inputs)?;
            println!(
                "estimate {:.6} +/- {:.6} (n={}, success {:.4}, death {:.4}, capped {:.4}, bias bound {:.2e})",
                file_report.mean,
                file_report.std_error,
                file_report.n,
                file_report.success_rate,
                file_report.death_rate,
                file_report.capped_rate,
                file_report.bias_bound
            );
            Ok(())
        }
        Command::Experiment { which, out_dir, baseline_failure_weighted, solver } => {
            let opts = ComparisonOptions {
                tol: solver.tol,
                max_iter: solver.max_iter,
                tie_tol: solver.tie_tol,
                failure_weighted: baseline_failure_weighted,
            };
            let which: Experiment = which.into();
            let report = run_comparison(which, &opts)?;
            io::write_experiment_outputs(&out_dir, &report)?;
            write_manifest(&out_dir, "experiment", &[])?;
            println!("experiment {}:", which.name());
            print_limit_summary(&report.limits);
            for check in &report.assumptions.checks {
                println!("{}: {}", check.id, if check.pass { "pass" } else { "fail" });
            }
            if let Some(bracket) = &report.bracket {
                println!(
                    "baseline curve within optimal m=4/m=5 curves: {}",
                    if bracket.pass { "yes" } else { "no" }
                );
            }
            println!("max gap {:.6} at {:?}", report.max_gap, report.max_gap_state);
            Ok(())
        }
    }
}

fn parse_start(text: &str) -> anyhow::Result<StateIndex> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Precondition(format!("--start expects 'h,k,m', got '{text}'")).into());
    }
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::Precondition(format!("--start parse error: {e}")))?;
    Ok(StateIndex::new(nums[0], nums[1], nums[2]))
}
