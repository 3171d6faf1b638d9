//! Closed-loop execution of a sampled trajectory against rigid-body
//! dynamics, and the attitude-enrichment step that feeds compensation.
//!
//! The planner assumes the vehicle flies level; physics disagrees. This
//! module quantifies the disagreement: a cascaded controller tracks the
//! planned trajectory, the simulated roll and pitch are collected, and
//! [`enrich_trajectory`] splices them into the planned stream for the
//! compensation stage.

mod control;
mod dynamics;
mod flatness;
mod model;

pub use control::{ControllerGains, DisturbanceModel};
pub use dynamics::{step_dynamics, FullState, Wrench};
pub use flatness::{feasibility_check, flat_attitude, FeasibilityReport};
pub use model::MultirotorParams;

use nalgebra::{DVector, Vector3};
use thiserror::Error;

use crate::toppra::SampledTrajectory;
use control::{control_tick, ControllerState, DisturbanceState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("commanded acceleration is within the free-fall singularity (|a + g e_z| = {accel_norm})")]
    FlatnessSingularity { accel_norm: f64 },
    #[error("state diverged at t = {t}")]
    StateDivergence { t: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("controller gains must be non-negative with positive limits")]
    InvalidGains,
    #[error("dt_sim = {dt_sim} does not divide the trajectory period T_s = {t_s}")]
    IncompatibleTimeStep { t_s: f64, dt_sim: f64 },
    #[error("trajectory is empty or has fewer than 4 coordinates")]
    BadTrajectory,
}

/// One sample of the enriched trajectory: all 6 + M coordinates.
///
/// Layout: (x, y, z, roll, pitch, yaw, joints...) with matching derivative
/// vectors. Control-space entries are copied verbatim from the planned
/// trajectory; only the roll and pitch slots carry simulated data.
#[derive(Clone, Debug, PartialEq)]
pub struct FullTrajectoryPoint {
    pub t: f64,
    pub q: DVector<f64>,
    pub dq: DVector<f64>,
    pub ddq: DVector<f64>,
}

/// Executes the trajectory in closed loop and records the state at every
/// sample time.
///
/// The controller runs once per trajectory period T_s (zero-order hold);
/// dynamics integrate at `dt_sim` between ticks; the disturbance walk steps
/// per tick. The returned trace has exactly one state per trajectory sample,
/// the first being the initial condition derived from sample zero.
pub fn simulate_tracking(
    traj: &SampledTrajectory,
    params: &MultirotorParams,
    gains: &ControllerGains,
    dt_sim: f64,
    disturbance: &DisturbanceModel,
) -> Result<Vec<FullState>, SimError> {
    gains.validate()?;
    let Some(first) = traj.points.first() else {
        return Err(SimError::BadTrajectory);
    };
    if first.q.len() < 4 {
        return Err(SimError::BadTrajectory);
    }
    let substeps = traj.t_s / dt_sim;
    if (substeps - substeps.round()).abs() > 1e-9 || substeps < 1.0 {
        return Err(SimError::IncompatibleTimeStep {
            t_s: traj.t_s,
            dt_sim,
        });
    }
    let substeps = substeps.round() as usize;
    let joints = first.q.len() - 4;

    let mut state = FullState {
        p_b: Vector3::new(first.q[0], first.q[1], first.q[2]),
        v_b: Vector3::new(first.dq[0], first.dq[1], first.dq[2]),
        theta_b: Vector3::new(0.0, 0.0, first.q[3]),
        omega_b: Vector3::new(0.0, 0.0, first.dq[3]),
        q_m: DVector::from_iterator(joints, first.q.iter().skip(4).copied()),
        dq_m: DVector::from_iterator(joints, first.dq.iter().skip(4).copied()),
    };

    let pinv = params.mixing_pinv();
    let mut memory = ControllerState::new();
    let mut walk = DisturbanceState::new(disturbance);
    let mut trace = Vec::with_capacity(traj.points.len());
    trace.push(state.clone());

    for k in 0..traj.points.len().saturating_sub(1) {
        let wrench = walk.tick(disturbance);
        let (forces, joint_accels) = control_tick(
            &state,
            &traj.points[k],
            gains,
            params,
            &pinv,
            &mut memory,
            traj.t_s,
        )?;
        for _ in 0..substeps {
            state = step_dynamics(&state, &forces, &joint_accels, &wrench, params, dt_sim)
                .map_err(|e| match e {
                    SimError::StateDivergence { .. } => SimError::StateDivergence {
                        t: traj.points[k].t,
                    },
                    other => other,
                })?;
        }
        trace.push(state.clone());
    }
    Ok(trace)
}

/// Splices simulated roll and pitch (with finite-difference derivatives)
/// into the planned control-space stream.
///
/// Every planned value is copied bit-for-bit; the roll/pitch slots are the
/// only additions.
pub fn enrich_trajectory(
    traj: &SampledTrajectory,
    sim_states: &[FullState],
) -> Result<Vec<FullTrajectoryPoint>, SimError> {
    if traj.points.len() != sim_states.len() {
        return Err(SimError::LengthMismatch {
            expected: traj.points.len(),
            got: sim_states.len(),
        });
    }
    let n = traj.points.len();
    let t_s = traj.t_s;
    let roll: Vec<f64> = sim_states.iter().map(|s| s.theta_b.x).collect();
    let pitch: Vec<f64> = sim_states.iter().map(|s| s.theta_b.y).collect();

    let fd1 = |y: &[f64], k: usize| -> f64 {
        if n == 1 {
            0.0
        } else if k == 0 {
            (y[1] - y[0]) / t_s
        } else if k == n - 1 {
            (y[n - 1] - y[n - 2]) / t_s
        } else {
            (y[k + 1] - y[k - 1]) / (2.0 * t_s)
        }
    };
    let fd2 = |y: &[f64], k: usize| -> f64 {
        if n < 3 {
            0.0
        } else {
            let k = k.clamp(1, n - 2);
            (y[k + 1] - 2.0 * y[k] + y[k - 1]) / (t_s * t_s)
        }
    };

    let mut out = Vec::with_capacity(n);
    for (k, p) in traj.points.iter().enumerate() {
        let joints = p.q.len() - 4;
        let dim = 6 + joints;
        let mut q = DVector::zeros(dim);
        let mut dq = DVector::zeros(dim);
        let mut ddq = DVector::zeros(dim);
        for (dst, src) in [(0usize, 0usize), (1, 1), (2, 2), (5, 3)] {
            q[dst] = p.q[src];
            dq[dst] = p.dq[src];
            ddq[dst] = p.ddq[src];
        }
        for j in 0..joints {
            q[6 + j] = p.q[4 + j];
            dq[6 + j] = p.dq[4 + j];
            ddq[6 + j] = p.ddq[4 + j];
        }
        q[3] = roll[k];
        q[4] = pitch[k];
        dq[3] = fd1(&roll, k);
        dq[4] = fd1(&pitch, k);
        ddq[3] = fd2(&roll, k);
        ddq[4] = fd2(&pitch, k);
        out.push(FullTrajectoryPoint {
            t: p.t,
            q,
            dq,
            ddq,
        });
    }
    Ok(out)
}
