//! The three subcommands.

use std::path::Path;

use aclgait::export;
use aclgait::gait::{self, GaitKind, JointTrajectory};
use aclgait::sim::{simulate, Simulation};
use rayon::prelude::*;
use serde::Serialize;
use toml::{Table, Value};

use crate::config::{self, RunSpec};
use crate::output::{Manifest, OutputDir};
use crate::CliError;

fn csv<F>(f: F) -> Vec<u8>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

fn trajectory(spec: &RunSpec) -> Result<JointTrajectory, CliError> {
    let traj = match spec.gait {
        GaitKind::Acl => {
            gait::acl_trajectory(&spec.params, &spec.robot, spec.n_steps, spec.cycles)?
        }
        GaitKind::Rolling => {
            gait::rolling_helix_trajectory(&spec.params, &spec.robot, spec.n_steps, spec.cycles)?
        }
    };
    log::info!(
        "{} gait: {} steps, max |joint angle| {:.2} deg",
        spec.gait.as_str(),
        traj.len(),
        traj.max_abs_angle().to_degrees()
    );
    Ok(traj)
}

/// Writes the joint command trajectory (`trajectory.csv`), the resolved
/// config and a manifest.
pub fn cmd_generate(spec: &RunSpec, out: &Path) -> Result<Manifest, CliError> {
    let traj = trajectory(spec)?;
    let mut dir = OutputDir::create(out)?;
    dir.write(
        "trajectory.csv",
        &csv(|w| export::write_trajectory_csv(w, &traj)),
    )?;
    dir.write("config.toml", spec.to_toml().as_bytes())?;
    dir.finish("generate", vec![spec.to_raw()])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisplacementReport {
    pub gait: GaitKind,
    pub n_steps: usize,
    pub cycles: usize,
    /// Per-step body advance over every step of every cycle (m).
    pub per_step_dx: Vec<f64>,
    pub cycle_subtotals: Vec<f64>,
    pub sum_dx: f64,
    /// Added once per cycle (m); zero when disabled.
    pub roll_term: f64,
    pub total: f64,
    /// Steps whose tracked contact sets barely overlap.
    pub flagged_steps: Vec<usize>,
}

impl DisplacementReport {
    pub fn new(spec: &RunSpec, run: &Simulation) -> Self {
        let e = &run.estimate;
        Self {
            gait: spec.gait,
            n_steps: spec.n_steps,
            cycles: spec.cycles,
            per_step_dx: e.per_step_dx.clone(),
            cycle_subtotals: e.cycle_subtotals(spec.n_steps),
            sum_dx: e.sum_dx(),
            roll_term: e.roll_term,
            total: e.rigid_body_total,
            flagged_steps: e.flagged_steps.clone(),
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("report serializes");
        v.push(b'\n');
        v
    }
}

fn run(spec: &RunSpec) -> Result<(Simulation, DisplacementReport), CliError> {
    let sim = simulate(&spec.sim_config())?;
    let report = DisplacementReport::new(spec, &sim);
    log::info!(
        "{} gait: sum dx {:.4} m, roll {:.4} m/cycle, total {:.4} m over {} cycles",
        spec.gait.as_str(),
        report.sum_dx,
        report.roll_term,
        report.total,
        spec.cycles
    );
    Ok((sim, report))
}

/// Runs the whole pipeline and writes trajectory, poses, chassis frames,
/// contacts and the displacement report.
pub fn cmd_simulate(
    spec: &RunSpec,
    out: &Path,
) -> Result<(Manifest, DisplacementReport), CliError> {
    log::info!(
        "max |joint angle| limit {:.1} deg",
        spec.robot.joint_limit.to_degrees()
    );
    let (sim, report) = run(spec)?;
    let mut dir = OutputDir::create(out)?;
    dir.write(
        "trajectory.csv",
        &csv(|w| export::write_trajectory_csv(w, &sim.trajectory)),
    )?;
    dir.write(
        "poses.csv",
        &csv(|w| export::write_poses_csv(w, &sim.chains)),
    )?;
    dir.write(
        "chassis.csv",
        &csv(|w| export::write_chassis_csv(w, &sim.chassis)),
    )?;
    dir.write(
        "contacts.csv",
        &csv(|w| export::write_contacts_csv(w, &sim.contacts)),
    )?;
    dir.write("displacement.json", &report.to_json())?;
    dir.write("config.toml", spec.to_toml().as_bytes())?;
    Ok((dir.finish("simulate", vec![spec.to_raw()])?, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    /// 1-based.
    pub index: usize,
    pub overrides: Vec<String>,
    pub rolling: f64,
    pub acl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub trials: Vec<TrialResult>,
    /// `(mean, population std)` of the rolling helix totals (m).
    pub rolling: (f64, f64),
    pub acl: (f64, f64),
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Comparison {
    /// Trials as rows, the two gaits as columns, in centimetres.
    pub fn to_markdown(&self) -> String {
        let mut s =
            String::from("| Trial | Rolling Helix Gait (cm) | ACL Gait (cm) |\n|---|---|---|\n");
        for t in &self.trials {
            s += &format!(
                "| {} | {:.2} | {:.2} |\n",
                t.index,
                100.0 * t.rolling,
                100.0 * t.acl
            );
        }
        s += &format!(
            "| Mean | {:.2} | {:.2} |\n",
            100.0 * self.rolling.0,
            100.0 * self.acl.0
        );
        s += &format!(
            "| Std. Dev. | {:.2} | {:.2} |\n",
            100.0 * self.rolling.1,
            100.0 * self.acl.1
        );
        s
    }

    pub fn to_csv(&self) -> String {
        let f = export::fmt_num;
        let mut s = String::from("trial,rolling_m,acl_m\n");
        for t in &self.trials {
            s += &format!("{},{},{}\n", t.index, f(t.rolling), f(t.acl));
        }
        s += &format!("mean,{},{}\n", f(self.rolling.0), f(self.acl.0));
        s += &format!("std,{},{}\n", f(self.rolling.1), f(self.acl.1));
        s
    }
}

fn gait_spec(base: &Table, overrides: &[String], gait: GaitKind) -> Result<RunSpec, CliError> {
    let mut table = base.clone();
    config::apply_overrides(&mut table, overrides)?;
    table.insert("gait".into(), Value::String(gait.as_str().into()));
    config::resolve(table)
}

/// Runs every trial for both gaits (trials in parallel) and tabulates the
/// total displacements. The first failing trial aborts the comparison.
pub fn cmd_compare(
    base: &Table,
    trials: &[Vec<String>],
    out: &Path,
) -> Result<(Manifest, Comparison), CliError> {
    if trials.is_empty() {
        return Err(CliError::Config("compare needs at least one trial".into()));
    }
    let results: Vec<Result<_, CliError>> = trials
        .par_iter()
        .map(|o| {
            let rolling = gait_spec(base, o, GaitKind::Rolling)?;
            let acl = gait_spec(base, o, GaitKind::Acl)?;
            let (_, r) = run(&rolling)?;
            let (_, a) = run(&acl)?;
            Ok((rolling, acl, r, a))
        })
        .collect();

    let mut dir = OutputDir::create(out)?;
    let mut rows = Vec::with_capacity(trials.len());
    let mut inputs = Vec::new();
    for (index, res) in results.into_iter().enumerate() {
        let (rolling, acl, r, a) = res.map_err(|e| CliError::Trial {
            index: index + 1,
            source: Box::new(e),
        })?;
        dir.write(
            &format!("trial_{:02}_rolling.json", index + 1),
            &r.to_json(),
        )?;
        dir.write(&format!("trial_{:02}_acl.json", index + 1), &a.to_json())?;
        inputs.push(rolling.to_raw());
        inputs.push(acl.to_raw());
        rows.push(TrialResult {
            index: index + 1,
            overrides: trials[index].clone(),
            rolling: r.total,
            acl: a.total,
        });
    }
    let rolling: Vec<f64> = rows.iter().map(|t| t.rolling).collect();
    let acl: Vec<f64> = rows.iter().map(|t| t.acl).collect();
    let cmp = Comparison {
        rolling: mean_std(&rolling),
        acl: mean_std(&acl),
        trials: rows,
    };
    dir.write("comparison.csv", cmp.to_csv().as_bytes())?;
    dir.write("comparison.md", cmp.to_markdown().as_bytes())?;
    Ok((dir.finish("compare", inputs)?, cmp))
}
