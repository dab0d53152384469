//! File formats: JSON model/solution/report serialization and flat CSV
//! exports. Numbers in CSV files are rendered in scientific notation with 13
//! significant digits; JSON uses serde's exact round-trip float encoding.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::ComparisonReport;
use crate::model::{validate_model, Action, ModelSpec};
use crate::sim::SimReport;
use crate::solver::Solution;
use crate::structure::{AssumptionReport, ControlLimitReport};

/// Formats a float with 13 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.12e}")
}

/// Parses and validates a model file. Probability rows must sum to 1 within
/// 1e-9 or the load is rejected.
pub fn load_model(path: &Path) -> Result<ModelSpec> {
    let text = fs::read_to_string(path)?;
    let spec: ModelSpec = serde_json::from_str(&text)?;
    let report = validate_model(&spec);
    if !report.passed() {
        return Err(Error::InvalidModel(report));
    }
    Ok(spec)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Solution CSV: one row per state, columns
/// `h,k,m,V,Q_W,Q_T,action,tie` with `Q_T` empty where infeasible.
pub fn write_solution_csv(path: &Path, spec: &ModelSpec, sol: &Solution) -> Result<()> {
    let mut out = String::from("h,k,m,V,Q_W,Q_T,action,tie\n");
    let d = &spec.dims;
    for h in 1..=d.death() {
        for k in 1..=d.no_offer() {
            for m in 1..=d.mismatch {
                let v = sol.values.get(h, k, m);
                let qw = sol.q.wait_at(h, k, m);
                let qt = sol
                    .q
                    .transplant_at(h, k, m)
                    .map(fmt_num)
                    .unwrap_or_default();
                let action = if h > d.patient || k > d.kidney {
                    Action::Wait
                } else {
                    sol.policy.action(h, k, m)
                };
                let tie = if h > d.patient || k > d.kidney {
                    false
                } else {
                    sol.policy.is_tie(h, k, m)
                };
                out.push_str(&format!(
                    "{h},{k},{m},{},{},{qt},{action},{tie}\n",
                    fmt_num(v),
                    fmt_num(qw),
                ));
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Control-limit CSV: columns `axis,coord1,coord2,limit`. Axes are
/// `match` (coords h,k), `kidney` (h,m), `patient` (k,m); only existing
/// families produce rows. Optional baseline curves use axes
/// `baseline-kidney` (h,0) and `baseline-patient` (k,0).
pub fn write_limits_csv(
    path: &Path,
    report: &ControlLimitReport,
    baseline_kidney: Option<&[usize]>,
    baseline_patient: Option<&[usize]>,
) -> Result<()> {
    let mut out = String::from("axis,coord1,coord2,limit\n");
    let table = |axis: &str, limits: &Option<Vec<Vec<usize>>>, out: &mut String| {
        if let Some(rows) = limits {
            for (i, row) in rows.iter().enumerate() {
                for (j, limit) in row.iter().enumerate() {
                    out.push_str(&format!("{axis},{},{},{limit}\n", i + 1, j + 1));
                }
            }
        }
    };
    table("match", &report.match_based.limits, &mut out);
    table("kidney", &report.kidney_based.limits, &mut out);
    table("patient", &report.patient_based.limits, &mut out);
    if let Some(kd) = baseline_kidney {
        for (h, limit) in kd.iter().enumerate() {
            out.push_str(&format!("baseline-kidney,{},0,{limit}\n", h + 1));
        }
    }
    if let Some(hd) = baseline_patient {
        for (k, limit) in hd.iter().enumerate() {
            out.push_str(&format!("baseline-patient,{},0,{limit}\n", k + 1));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_assumptions_json(path: &Path, report: &AssumptionReport) -> Result<()> {
    write_json(path, report)
}

/// Comparison CSV: columns `h,k,m,V_opt,V_baseline,gap`.
pub fn write_comparison_csv(path: &Path, report: &ComparisonReport) -> Result<()> {
    let spec = report.spec();
    let sol = report.solution();
    let lifted = report.lifted_value();
    let gap = report.gap();
    let d = &spec.dims;
    let mut out = String::from("h,k,m,V_opt,V_baseline,gap\n");
    for h in 1..=d.death() {
        for k in 1..=d.no_offer() {
            for m in 1..=d.mismatch {
                out.push_str(&format!(
                    "{h},{k},{m},{},{},{}\n",
                    fmt_num(sol.values.get(h, k, m)),
                    fmt_num(lifted.values.get(h, k, m)),
                    fmt_num(gap.get(h, k, m)),
                ));
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Baseline solution CSV: columns `h,k,V,Q_W,Q_T,action` over the reduced
/// (patient, kidney) grid, `Q_T`/action empty at the no-offer column.
pub fn write_baseline_csv(path: &Path, report: &ComparisonReport) -> Result<()> {
    let bsol = report.baseline_solution();
    let baseline = report.baseline();
    let d = &baseline.dims;
    let mut out = String::from("h,k,V,Q_W,Q_T,action\n");
    for h in 1..=d.death() {
        for k in 1..=d.no_offer() {
            let v = bsol.values.get(h, k);
            let qw = if h <= d.patient { bsol.q_wait[h - 1] } else { 0.0 };
            let (qt, action) = if h <= d.patient && k <= d.kidney {
                (
                    fmt_num(baseline.mean_reward.get(h, k)),
                    bsol.policy[h - 1][k - 1].to_string(),
                )
            } else {
                (String::new(), Action::Wait.to_string())
            };
            out.push_str(&format!("{h},{k},{},{},{qt},{action}\n", fmt_num(v), fmt_num(qw)));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Trajectory log CSV: columns `epoch,h,k,m,action,event,reward`, epochs
/// restarting at 0 for each trajectory.
pub fn write_trajectories_csv(path: &Path, report: &SimReport) -> Result<()> {
    let log = report
        .log
        .as_ref()
        .ok_or_else(|| Error::Precondition("simulation ran without trajectory logging".into()))?;
    let mut out = String::from("epoch,h,k,m,action,event,reward\n");
    for trajectory in log {
        for rec in trajectory {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                rec.epoch,
                rec.h,
                rec.k,
                rec.m,
                rec.action,
                rec.event,
                fmt_num(rec.reward)
            ));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes the full reproduction directory for one experiment:
/// `model.json`, `baseline.json`, `solution.csv`, `baseline_solution.csv`,
/// `limits.csv`, `comparison.csv`, `assumptions.json`, plus `limits.json`
/// and `comparison.json` with the structured reports.
pub fn write_experiment_outputs(dir: &Path, report: &ComparisonReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut record = |p: PathBuf| {
        written.push(p.clone());
        p
    };
    write_json(&record(dir.join("model.json")), report.spec())?;
    write_json(&record(dir.join("baseline.json")), report.baseline())?;
    write_solution_csv(&record(dir.join("solution.csv")), report.spec(), report.solution())?;
    write_baseline_csv(&record(dir.join("baseline_solution.csv")), report)?;
    write_limits_csv(
        &record(dir.join("limits.csv")),
        &report.limits,
        report.baseline_solution().kidney_limits.as_deref(),
        report.baseline_solution().patient_limits.as_deref(),
    )?;
    write_comparison_csv(&record(dir.join("comparison.csv")), report)?;
    write_assumptions_json(&record(dir.join("assumptions.json")), &report.assumptions)?;
    write_json(&record(dir.join("limits.json")), &report.limits)?;
    write_json(&record(dir.join("comparison.json")), report)?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{build_experiment_model, Experiment};
    use crate::solver::{solve_value_iteration, SolveOptions};

    #[test]
    fn model_roundtrips_through_json() {
        let spec = build_experiment_model(Experiment::Exp1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        write_json(&path, &spec).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn invalid_model_rejected_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let mut spec = build_experiment_model(Experiment::Exp1);
        spec.wait_kernel.set(1, 2, 0.5); // break row sum
        write_json(&path, &spec).unwrap();
        assert!(matches!(load_model(&path), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn solution_csv_has_header_and_full_state_grid() {
        let spec = build_experiment_model(Experiment::Exp1);
        let sol = solve_value_iteration(&spec, &SolveOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("solution.csv");
        write_solution_csv(&path, &spec, &sol).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("h,k,m,V,Q_W,Q_T,action,tie"));
        assert_eq!(text.lines().count(), 1 + spec.dims.n_states());
        // No-offer rows carry an empty Q_T field.
        let no_offer_line = text
            .lines()
            .find(|l| l.starts_with("1,5,1,"))
            .expect("state (1,5,1) present");
        let fields: Vec<&str> = no_offer_line.split(',').collect();
        assert_eq!(fields[5], "");
        assert_eq!(fields[6], "W");
    }
}
