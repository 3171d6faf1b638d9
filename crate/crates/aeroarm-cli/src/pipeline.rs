//! Pipeline stages and their on-disk artifacts.
//!
//! Every stage reads its inputs from the output directory and writes its
//! products back there, even when several stages run in one invocation.
//! Because the CSV formats round-trip floats exactly, chaining stages
//! through disk is bit-equivalent to chaining them in memory, so separate
//! invocations produce byte-identical artifacts.
//!
//! Artifacts: `path.csv`, `trajectory.csv`, `sim_trace.csv`,
//! `compensated.csv`, `errors.csv`, `comp_meta.json`, `report.json`.

use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use aeroarm::{
    audit_compensation, compensate, desired_ee_poses, enrich_trajectory, errors_to_csv,
    executed_ee_pose, feasibility_check, path_from_csv, path_to_csv, plan_path,
    sim_trace_from_csv, sim_trace_to_csv, simulate_tracking, trajectory_from_csv,
    trajectory_to_csv, CsvError, ErrorRow, FullState, PlannerError, SampledTrajectory, SimError,
    ToppError,
};

use crate::scenario::{Scenario, ScenarioError};

/// One stage of the batch pipeline, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Plan,
    Parametrize,
    Simulate,
    Compensate,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Plan,
        Stage::Parametrize,
        Stage::Simulate,
        Stage::Compensate,
        Stage::Evaluate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Plan => "plan",
            Stage::Parametrize => "parametrize",
            Stage::Simulate => "simulate",
            Stage::Compensate => "compensate",
            Stage::Evaluate => "evaluate",
        }
    }
}

/// Pipeline failure; [`PipelineError::exit_code`] maps each class to the
/// documented process exit code.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("artifact `{path}`: {message}")]
    Artifact { path: PathBuf, message: String },
    #[error("planning failed: {0}")]
    Planning(#[from] PlannerError),
    #[error("parametrization failed: {0}")]
    Parametrization(#[from] ToppError),
    #[error("simulation failed: {0}")]
    Simulation(#[from] SimError),
}

impl PipelineError {
    /// 2 scenario/artifact error, 3 planning, 4 parametrization,
    /// 5 simulation.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Scenario(_) | PipelineError::Artifact { .. } => 2,
            PipelineError::Planning(_) => 3,
            PipelineError::Parametrization(_) => 4,
            PipelineError::Simulation(_) => 5,
        }
    }
}

/// Per-run switches that are not part of the scenario file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    /// Skip the joint rewrite: `compensated.csv` becomes a byte copy of
    /// `trajectory.csv`, producing the uncompensated baseline run.
    pub no_compensation: bool,
}

/// Compensation stage summary stored next to the trajectory it describes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompMeta {
    pub schema_version: u32,
    pub compensation_enabled: bool,
    pub unreachable_count: usize,
    pub clamped_count: usize,
    pub max_translation_residual: f64,
    pub max_rotation_residual: f64,
    /// Sample indices whose joint step exceeds what the velocity limit
    /// allows in one period.
    pub continuity_violations: Vec<usize>,
    /// True when a rewritten joint velocity or acceleration breaks the
    /// scenario limits beyond tolerance.
    pub limit_exceeded: bool,
    /// Per-sample inverse-kinematics residuals (translation m, rotation rad).
    pub residuals: Vec<(f64, f64)>,
}

/// Machine-readable run summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub planner_seed: u64,
    pub disturbance_seed: u64,
    pub compensation_enabled: bool,
    pub n_samples: usize,
    pub t_s: f64,
    pub duration: f64,
    /// Peak simulated |roll| and |pitch| over the planned-trajectory run.
    pub roll_peak: f64,
    pub pitch_peak: f64,
    /// Peak |z| error the lever-arm geometry predicts for the uncompensated
    /// end-effector at the peak pitch.
    pub predicted_z_err_uncompensated: f64,
    pub peak_translation_err: f64,
    pub rms_translation_err: f64,
    pub peak_rotation_err: f64,
    pub rms_rotation_err: f64,
    pub peak_z_err_uncompensated: f64,
    pub rms_z_err_uncompensated: f64,
    pub peak_z_err_compensated: f64,
    pub rms_z_err_compensated: f64,
    pub unreachable_count: usize,
    pub clamped_count: usize,
    pub continuity_violations: usize,
    pub limit_exceeded: bool,
}

fn artifact_path(out: &FsPath, name: &str) -> PathBuf {
    out.join(name)
}

fn write_artifact(out: &FsPath, name: &str, contents: &str) -> Result<(), PipelineError> {
    let path = artifact_path(out, name);
    std::fs::write(&path, contents).map_err(|e| PipelineError::Artifact {
        path,
        message: e.to_string(),
    })
}

fn read_artifact(out: &FsPath, name: &str) -> Result<String, PipelineError> {
    let path = artifact_path(out, name);
    std::fs::read_to_string(&path).map_err(|e| PipelineError::Artifact {
        path,
        message: e.to_string(),
    })
}

fn csv_err(out: &FsPath, name: &str) -> impl FnOnce(CsvError) -> PipelineError {
    let path = artifact_path(out, name);
    move |e| PipelineError::Artifact {
        path,
        message: e.to_string(),
    }
}

/// Runs the requested stages in pipeline order against one output
/// directory, creating it if needed.
pub fn run_stages(
    scenario: &Scenario,
    stages: &[Stage],
    cfg: &RunConfig,
) -> Result<(), PipelineError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| PipelineError::Artifact {
        path: cfg.out_dir.clone(),
        message: e.to_string(),
    })?;
    for stage in Stage::ALL {
        if !stages.contains(&stage) {
            continue;
        }
        match stage {
            Stage::Plan => stage_plan(scenario, &cfg.out_dir)?,
            Stage::Parametrize => stage_parametrize(scenario, &cfg.out_dir)?,
            Stage::Simulate => stage_simulate(scenario, &cfg.out_dir)?,
            Stage::Compensate => stage_compensate(scenario, cfg)?,
            Stage::Evaluate => stage_evaluate(scenario, cfg)?,
        }
    }
    Ok(())
}

fn stage_plan(scenario: &Scenario, out: &FsPath) -> Result<(), PipelineError> {
    let path = plan_path(
        &scenario.waypoints,
        &scenario.obstacles,
        &scenario.geometry,
        &scenario.rrt,
        scenario.planner_seed,
    )?;
    let text = path_to_csv(&path).map_err(csv_err(out, "path.csv"))?;
    write_artifact(out, "path.csv", &text)?;
    eprintln!("[plan] path.csv: {} points", path.points.len());
    Ok(())
}

fn stage_parametrize(scenario: &Scenario, out: &FsPath) -> Result<(), PipelineError> {
    let path =
        path_from_csv(&read_artifact(out, "path.csv")?).map_err(csv_err(out, "path.csv"))?;
    let traj = aeroarm::parametrize(&path, &scenario.limits, scenario.grid_points, scenario.t_s)?;
    let text = trajectory_to_csv(&traj).map_err(csv_err(out, "trajectory.csv"))?;
    write_artifact(out, "trajectory.csv", &text)?;
    eprintln!(
        "[parametrize] trajectory.csv: {} samples, {:.2} s",
        traj.points.len(),
        traj.duration()
    );
    Ok(())
}

fn load_trajectory(out: &FsPath, name: &str) -> Result<SampledTrajectory, PipelineError> {
    trajectory_from_csv(&read_artifact(out, name)?).map_err(csv_err(out, name))
}

fn stage_simulate(scenario: &Scenario, out: &FsPath) -> Result<(), PipelineError> {
    let traj = load_trajectory(out, "trajectory.csv")?;
    let feas = feasibility_check(&traj, &scenario.vehicle, scenario.max_tilt);
    if !feas.tilt_violations.is_empty() {
        eprintln!(
            "[simulate] warning: {} samples demand tilt beyond {} rad (peak {:.3})",
            feas.tilt_violations.len(),
            scenario.max_tilt,
            feas.max_tilt
        );
    }
    if !feas.singular_samples.is_empty() {
        eprintln!(
            "[simulate] warning: {} samples near free-fall singularity",
            feas.singular_samples.len()
        );
    }
    let states = simulate_tracking(
        &traj,
        &scenario.vehicle,
        &scenario.gains,
        scenario.dt_sim,
        &scenario.disturbance,
    )?;
    let text = sim_trace_to_csv(&traj, &states).map_err(csv_err(out, "sim_trace.csv"))?;
    write_artifact(out, "sim_trace.csv", &text)?;
    eprintln!("[simulate] sim_trace.csv: {} states", states.len());
    Ok(())
}

fn load_sim_states(out: &FsPath) -> Result<Vec<FullState>, PipelineError> {
    let rows = sim_trace_from_csv(&read_artifact(out, "sim_trace.csv")?)
        .map_err(csv_err(out, "sim_trace.csv"))?;
    Ok(rows.iter().map(|r| r.to_state()).collect())
}

fn stage_compensate(scenario: &Scenario, cfg: &RunConfig) -> Result<(), PipelineError> {
    let out = cfg.out_dir.as_path();
    let traj_text = read_artifact(out, "trajectory.csv")?;
    if cfg.no_compensation {
        // baseline run: the executed joints are the planned joints
        write_artifact(out, "compensated.csv", &traj_text)?;
        let meta = CompMeta {
            schema_version: 1,
            compensation_enabled: false,
            unreachable_count: 0,
            clamped_count: 0,
            max_translation_residual: 0.0,
            max_rotation_residual: 0.0,
            continuity_violations: Vec::new(),
            limit_exceeded: false,
            residuals: Vec::new(),
        };
        write_json(out, "comp_meta.json", &meta)?;
        eprintln!("[compensate] disabled; compensated.csv copies trajectory.csv");
        return Ok(());
    }
    let traj = trajectory_from_csv(&traj_text).map_err(csv_err(out, "trajectory.csv"))?;
    let states = load_sim_states(out)?;
    let enriched = enrich_trajectory(&traj, &states)?;
    let result = compensate(
        &traj,
        &enriched,
        &scenario.t_b_l0,
        &scenario.table,
        &scenario.ik,
    )?;
    let audit = audit_compensation(&result.compensated, &scenario.limits);
    let text = trajectory_to_csv(&result.compensated).map_err(csv_err(out, "compensated.csv"))?;
    write_artifact(out, "compensated.csv", &text)?;
    let meta = CompMeta {
        schema_version: 1,
        compensation_enabled: true,
        unreachable_count: result.unreachable_count,
        clamped_count: result.clamped_count,
        max_translation_residual: result
            .residuals
            .iter()
            .map(|r| r.0)
            .fold(0.0, f64::max),
        max_rotation_residual: result
            .residuals
            .iter()
            .map(|r| r.1)
            .fold(0.0, f64::max),
        continuity_violations: audit.continuity_violations.clone(),
        limit_exceeded: audit.limit_exceeded,
        residuals: result.residuals.clone(),
    };
    write_json(out, "comp_meta.json", &meta)?;
    eprintln!(
        "[compensate] compensated.csv: {} samples, {} unreachable, {} clamped",
        result.compensated.points.len(),
        result.unreachable_count,
        result.clamped_count
    );
    Ok(())
}

fn stage_evaluate(scenario: &Scenario, cfg: &RunConfig) -> Result<(), PipelineError> {
    let out = cfg.out_dir.as_path();
    let planned = load_trajectory(out, "trajectory.csv")?;
    let compensated = load_trajectory(out, "compensated.csv")?;
    let uncomp_states = load_sim_states(out)?;
    let meta: CompMeta = read_json(out, "comp_meta.json")?;
    if planned.points.len() != uncomp_states.len() {
        return Err(PipelineError::Simulation(SimError::LengthMismatch {
            expected: planned.points.len(),
            got: uncomp_states.len(),
        }));
    }

    // The executed compensated run: same vehicle, gains, step and
    // disturbance seed as the simulate stage, so the base flies the same
    // attitude trace and only the arm acts differently.
    let comp_states = simulate_tracking(
        &compensated,
        &scenario.vehicle,
        &scenario.gains,
        scenario.dt_sim,
        &scenario.disturbance,
    )?;

    let desired = desired_ee_poses(&planned, &scenario.t_b_l0, &scenario.table);
    let mut rows = Vec::with_capacity(planned.points.len());
    for (k, want) in desired.iter().enumerate() {
        let unc = executed_ee_pose(
            &uncomp_states[k],
            &uncomp_states[k].q_m,
            &scenario.t_b_l0,
            &scenario.table,
        );
        let com = executed_ee_pose(
            &comp_states[k],
            &comp_states[k].q_m,
            &scenario.t_b_l0,
            &scenario.table,
        );
        let (translation_err, rotation_err) = aeroarm::pose_error(&com, want);
        rows.push(ErrorRow {
            t: planned.points[k].t,
            translation_err,
            rotation_err,
            z_err_uncompensated: unc.translation().z - want.translation().z,
            z_err_compensated: com.translation().z - want.translation().z,
        });
    }
    write_artifact(out, "errors.csv", &errors_to_csv(&rows))?;

    let peak = |f: fn(&ErrorRow) -> f64| rows.iter().map(|r| f(r).abs()).fold(0.0, f64::max);
    let rms = |f: fn(&ErrorRow) -> f64| {
        (rows.iter().map(|r| f(r) * f(r)).sum::<f64>() / rows.len().max(1) as f64).sqrt()
    };
    let roll_peak = uncomp_states
        .iter()
        .map(|s| s.theta_b.x.abs())
        .fold(0.0, f64::max);
    let pitch_peak = uncomp_states
        .iter()
        .map(|s| s.theta_b.y.abs())
        .fold(0.0, f64::max);
    let report = Report {
        schema_version: 1,
        scenario: scenario.name.clone(),
        planner_seed: scenario.planner_seed,
        disturbance_seed: scenario.disturbance.seed,
        compensation_enabled: meta.compensation_enabled,
        n_samples: rows.len(),
        t_s: planned.t_s,
        duration: planned.duration(),
        roll_peak,
        pitch_peak,
        predicted_z_err_uncompensated: aeroarm::presets::SHOULDER_TO_EE * pitch_peak.sin(),
        peak_translation_err: peak(|r| r.translation_err),
        rms_translation_err: rms(|r| r.translation_err),
        peak_rotation_err: peak(|r| r.rotation_err),
        rms_rotation_err: rms(|r| r.rotation_err),
        peak_z_err_uncompensated: peak(|r| r.z_err_uncompensated),
        rms_z_err_uncompensated: rms(|r| r.z_err_uncompensated),
        peak_z_err_compensated: peak(|r| r.z_err_compensated),
        rms_z_err_compensated: rms(|r| r.z_err_compensated),
        unreachable_count: meta.unreachable_count,
        clamped_count: meta.clamped_count,
        continuity_violations: meta.continuity_violations.len(),
        limit_exceeded: meta.limit_exceeded,
    };
    write_json(out, "report.json", &report)?;
    eprintln!(
        "[evaluate] errors.csv: peak z {:.4} m uncompensated vs {:.4} m compensated",
        report.peak_z_err_uncompensated, report.peak_z_err_compensated
    );
    Ok(())
}

fn write_json<T: Serialize>(out: &FsPath, name: &str, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Artifact {
        path: artifact_path(out, name),
        message: e.to_string(),
    })?;
    text.push('\n');
    write_artifact(out, name, &text)
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(
    out: &FsPath,
    name: &str,
) -> Result<T, PipelineError> {
    let text = read_artifact(out, name)?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Artifact {
        path: artifact_path(out, name),
        message: e.to_string(),
    })
}
