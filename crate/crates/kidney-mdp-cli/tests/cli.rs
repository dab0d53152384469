//! End-to-end tests of the command-line interface: exit codes, output files,
//! and byte-identical reruns.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kidney_mdp::experiments::{build_experiment_model, Experiment};
use kidney_mdp::io::write_json;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kidney-mdp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_exp1_model(path: &Path) {
    let spec = build_experiment_model(Experiment::Exp1);
    write_json(path, &spec).unwrap();
}

#[test]
fn solve_rejects_invalid_schema_without_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.json");
    fs::write(&input, "{\"dims\": {\"H\": 1}}").unwrap();
    let out_dir = dir.path().join("out");
    let output = run(&[
        "solve",
        "--input",
        input.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    assert!(!out_dir.exists(), "no partial outputs on bad input");
}

#[test]
fn solve_rejects_model_violating_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("model.json");
    let mut spec = build_experiment_model(Experiment::Exp1);
    spec.transplant_reward.set(17, 1, 1, 1.0); // terminal reward at death
    write_json(&input, &spec).unwrap();
    let out_dir = dir.path().join("out");
    let output = run(&[
        "solve",
        "--input",
        input.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("terminal reward at death nonzero"), "{stderr}");
}

#[test]
fn solve_writes_files_and_reruns_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("model.json");
    write_exp1_model(&input);
    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    for out in [&out1, &out2] {
        let output = run(&[
            "solve",
            "--input",
            input.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert_eq!(output.status.code(), Some(0), "{output:?}");
        for f in ["solution.json", "solution.csv", "policy.json", "manifest.json"] {
            assert!(out.join(f).exists(), "{f} missing");
        }
    }
    for f in ["solution.json", "solution.csv", "policy.json"] {
        let a = fs::read(out1.join(f)).unwrap();
        let b = fs::read(out2.join(f)).unwrap();
        assert_eq!(a, b, "{f} not byte-identical across reruns");
    }
}

#[test]
fn experiment_exp1_emits_limits_for_all_three_families() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp1");
    let output = run(&["experiment", "exp1", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    for f in [
        "model.json",
        "baseline.json",
        "solution.csv",
        "baseline_solution.csv",
        "limits.csv",
        "comparison.csv",
        "assumptions.json",
        "manifest.json",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let limits = fs::read_to_string(out.join("limits.csv")).unwrap();
    for axis in ["match,", "kidney,", "patient,"] {
        assert!(limits.lines().any(|l| l.starts_with(axis)), "axis {axis} missing");
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("match-based: exists"));
    assert!(stdout.contains("patient-based: exists"));
}

#[test]
fn experiment_exp2_flags_patient_family_at_m7() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp2");
    let output = run(&["experiment", "exp2", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("patient-based: does not exist"), "{stdout}");
    assert!(stdout.contains("(2, 7)"), "failing slice at m=7 reported: {stdout}");
    // The limits file only carries the existing families.
    let limits = fs::read_to_string(out.join("limits.csv")).unwrap();
    assert!(!limits.lines().any(|l| l.starts_with("patient,")));
}

#[test]
fn compare_dominance_rejects_incompatible_models() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    write_exp1_model(&a);
    let mut spec = build_experiment_model(Experiment::Exp1);
    spec.transplant_reward.set(1, 1, 1, 11.5); // rewards differ: not comparable
    write_json(&b, &spec).unwrap();
    let out = dir.path().join("out");
    let output = run(&[
        "compare",
        "--mode",
        "offer",
        "--input",
        a.to_str().unwrap(),
        "--input2",
        b.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(4), "{output:?}");
}

#[test]
fn compare_baseline_reports_gap_and_bracket() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("model.json");
    write_exp1_model(&input);
    let out = dir.path().join("base");
    let output = run(&[
        "compare",
        "--mode",
        "baseline",
        "--input",
        input.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    for f in ["baseline.json", "baseline_solution.csv", "comparison.csv", "comparison.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("max gap"), "{stdout}");
    assert!(stdout.contains("baseline curve within optimal m=4/m=5 curves: yes"), "{stdout}");
    let comparison = fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert!(comparison.starts_with("h,k,m,V_opt,V_baseline,gap"));
}

#[test]
fn compare_dominance_requires_second_input() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    write_exp1_model(&a);
    let output = run(&[
        "compare",
        "--mode",
        "offer",
        "--input",
        a.to_str().unwrap(),
        "--out-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(4));
}

#[test]
fn simulate_writes_report_and_optional_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("model.json");
    write_exp1_model(&input);
    let out = dir.path().join("sim");
    let output = run(&[
        "simulate",
        "--input",
        input.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--n",
        "2000",
        "--seed",
        "5",
        "--start",
        "1,5,1",
        "--log-trajectories",
    ]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    assert!(out.join("simulate.json").exists());
    let log = fs::read_to_string(out.join("trajectories.csv")).unwrap();
    assert!(log.starts_with("epoch,h,k,m,action,event,reward"));
    assert!(log.lines().count() > 2000, "one row per epoch per trajectory");
}

#[test]
fn check_reports_assumption_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("model.json");
    write_exp1_model(&input);
    let out = dir.path().join("check");
    let output = run(&[
        "check",
        "--input",
        input.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("A4: pass"));
    assert!(stdout.contains("A9: fail"));
    assert!(out.join("assumptions.json").exists());
}
