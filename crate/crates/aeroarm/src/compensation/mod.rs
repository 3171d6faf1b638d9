//! End-effector pose compensation.
//!
//! The planner promises an end-effector pose computed with the vehicle
//! flying level. Simulation says the vehicle actually rolls and pitches.
//! This module rewrites the arm joint trajectory so the end-effector holds
//! its planned pose anyway: for each sample, the desired world pose is
//! re-expressed in the arm base frame using the simulated attitude, and
//! inverse kinematics recovers the joints that realize it. Only the
//! manipulator columns change; the vehicle flies the same trajectory.

use nalgebra::{DVector, Vector3};

use crate::kinematics::{
    forward_kinematics, inverse_kinematics, joint_frames, pose_error, DHTable,
    HomogeneousTransform, IKOptions,
};
use crate::sim::{FullState, FullTrajectoryPoint, SimError};
use crate::toppra::{ControlTrajectoryPoint, KinodynamicLimits, SampledTrajectory};

/// Outcome of compensating one trajectory against one attitude stream.
#[derive(Clone, Debug, PartialEq)]
pub struct CompensationResult {
    /// Input trajectory with the joint columns rewritten; UAV columns are
    /// bit-identical to the input.
    pub compensated: SampledTrajectory,
    /// Per-sample IK residual (translation m, rotation rad).
    pub residuals: Vec<(f64, f64)>,
    /// Samples whose combined residual exceeded the IK acceptance tolerance;
    /// those keep the best-effort joints.
    pub unreachable_count: usize,
    /// Samples whose IK solution sits on a joint-limit boundary, i.e. the
    /// unconstrained solution would have violated the limit.
    pub clamped_count: usize,
}

/// Post-compensation sanity report over the rewritten joint columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CompensationAudit {
    /// Sample indices whose joint step from the previous sample exceeds
    /// rate-limit * T_s * 1.5 (slack for IK nonlinearity).
    pub continuity_violations: Vec<usize>,
    /// True when any finite-difference joint velocity or acceleration
    /// exceeds its limit by more than 5%.
    pub limit_exceeded: bool,
}

/// Desired world pose of the end-effector at every sample, computed the way
/// the planner meant it: zero roll and pitch.
pub fn desired_ee_poses(
    traj: &SampledTrajectory,
    t_b_l0: &HomogeneousTransform,
    table: &DHTable,
) -> Vec<HomogeneousTransform> {
    traj.points
        .iter()
        .map(|p| {
            let base = planned_base_pose(p);
            let q = joint_vector(p);
            let fk = forward_kinematics(table, &q).expect("trajectory matches table");
            base.compose(t_b_l0).compose(&fk)
        })
        .collect()
}

fn planned_base_pose(p: &ControlTrajectoryPoint) -> HomogeneousTransform {
    HomogeneousTransform::from_euler_zyx(
        0.0,
        0.0,
        p.q[3],
        Vector3::new(p.q[0], p.q[1], p.q[2]),
    )
}

fn joint_vector(p: &ControlTrajectoryPoint) -> DVector<f64> {
    DVector::from_iterator(p.q.len() - 4, p.q.iter().skip(4).copied())
}

/// Simulated base pose: planned position and yaw, simulated roll and pitch.
///
/// The enriched stream carries roll in slot 3 and pitch in slot 4; position
/// and yaw stay the planner's, because compensation corrects for attitude
/// error specifically (position error is the controller's business).
fn simulated_base_pose(e: &FullTrajectoryPoint) -> HomogeneousTransform {
    HomogeneousTransform::from_euler_zyx(
        e.q[3],
        e.q[4],
        e.q[5],
        Vector3::new(e.q[0], e.q[1], e.q[2]),
    )
}

/// Desired world EE pose read off one enriched sample: the planned chain at
/// zero roll and pitch. The enriched joint columns always carry the planned
/// joints, so this stays the original target even when the trajectory being
/// rewritten has been compensated before.
fn desired_pose_from_enriched(
    e: &FullTrajectoryPoint,
    t_b_l0: &HomogeneousTransform,
    table: &DHTable,
) -> HomogeneousTransform {
    let base = HomogeneousTransform::from_euler_zyx(
        0.0,
        0.0,
        e.q[5],
        Vector3::new(e.q[0], e.q[1], e.q[2]),
    );
    let q = DVector::from_iterator(e.q.len() - 6, e.q.iter().skip(6).copied());
    let fk = forward_kinematics(table, &q).expect("enriched stream matches table");
    base.compose(t_b_l0).compose(&fk)
}

/// Rewrites the manipulator portion of `traj` so the end-effector tracks the
/// planned pose under the simulated attitude.
///
/// Per sample: the correction target is the desired world pose pulled back
/// through the simulated base pose and the mount, and IK runs on it seeded
/// with the previous sample's solution (sample 0 with the planned joints),
/// which keeps consecutive solutions on the same branch. Samples whose
/// residual exceeds `ik_opts.accept_tol` keep the best-effort approximation
/// and are counted. Joint velocity and acceleration columns are recomputed
/// by central finite differences whenever any joint changed.
pub fn compensate(
    traj: &SampledTrajectory,
    enriched: &[FullTrajectoryPoint],
    t_b_l0: &HomogeneousTransform,
    table: &DHTable,
    ik_opts: &IKOptions,
) -> Result<CompensationResult, SimError> {
    if traj.points.len() != enriched.len() {
        return Err(SimError::LengthMismatch {
            expected: traj.points.len(),
            got: enriched.len(),
        });
    }
    let base_inv = t_b_l0.inverse();

    let mut compensated = traj.clone();
    let mut residuals = Vec::with_capacity(traj.points.len());
    let mut unreachable_count = 0;
    let mut clamped_count = 0;
    let mut seed = traj
        .points
        .first()
        .map(joint_vector)
        .unwrap_or_else(|| DVector::zeros(0));

    for (k, point) in compensated.points.iter_mut().enumerate() {
        // The target chain is rebuilt from the enriched sample, whose joint
        // columns carry the planned joints, so running this pass twice over
        // the same enriched stream rewrites to the same joints both times.
        let world_target = desired_pose_from_enriched(&enriched[k], t_b_l0, table);
        let sim_base = simulated_base_pose(&enriched[k]);
        let target = base_inv
            .compose(&sim_base.inverse())
            .compose(&world_target);
        let solution = inverse_kinematics(table, &target, &seed, ik_opts)
            .expect("seed dimension matches table");
        residuals.push((solution.translation_err, solution.rotation_err));
        if solution.residual > ik_opts.accept_tol {
            unreachable_count += 1;
        }
        if on_limit_boundary(&solution.q, &ik_opts.joint_limits) {
            clamped_count += 1;
        }
        for (j, &v) in solution.q.iter().enumerate() {
            point.q[4 + j] = v;
        }
        seed = solution.q;
    }

    // skipping the derivative rewrite when nothing moved keeps the
    // level-attitude case an exact no-op
    let changed = compensated
        .points
        .iter()
        .zip(&traj.points)
        .any(|(a, b)| a.q != b.q);
    if changed {
        recompute_joint_derivatives(&mut compensated);
    }

    Ok(CompensationResult {
        compensated,
        residuals,
        unreachable_count,
        clamped_count,
    })
}

fn on_limit_boundary(q: &DVector<f64>, limits: &Option<Vec<(f64, f64)>>) -> bool {
    match limits {
        Some(limits) => q
            .iter()
            .zip(limits)
            .any(|(&v, &(lo, hi))| v == lo || v == hi),
        None => false,
    }
}

fn recompute_joint_derivatives(traj: &mut SampledTrajectory) {
    let n = traj.points.len();
    if n == 0 {
        return;
    }
    let joints = traj.points[0].q.len() - 4;
    let t_s = traj.t_s;
    for j in 0..joints {
        let series: Vec<f64> = traj.points.iter().map(|p| p.q[4 + j]).collect();
        for k in 0..n {
            let dq = if n == 1 {
                0.0
            } else if k == 0 {
                (series[1] - series[0]) / t_s
            } else if k == n - 1 {
                (series[n - 1] - series[n - 2]) / t_s
            } else {
                (series[k + 1] - series[k - 1]) / (2.0 * t_s)
            };
            let ddq = if n < 3 {
                0.0
            } else {
                let c = k.clamp(1, n - 2);
                (series[c + 1] - 2.0 * series[c] + series[c - 1]) / (t_s * t_s)
            };
            traj.points[k].dq[4 + j] = dq;
            traj.points[k].ddq[4 + j] = ddq;
        }
    }
}

/// Checks the rewritten joint columns against the original kinodynamic
/// limits: per-sample continuity of the joint positions, and a 5%-grace
/// audit of the finite-difference velocities and accelerations.
///
/// Compensation never re-time-parametrizes; this audit makes any limit
/// stress visible in the run report instead.
pub fn audit_compensation(
    compensated: &SampledTrajectory,
    limits: &KinodynamicLimits,
) -> CompensationAudit {
    let mut audit = CompensationAudit::default();
    let Some(first) = compensated.points.first() else {
        return audit;
    };
    let dim = first.q.len();
    if limits.v_max.len() != dim || limits.a_max.len() != dim {
        audit.limit_exceeded = true;
        return audit;
    }
    for k in 1..compensated.points.len() {
        for j in 4..dim {
            let step = (compensated.points[k].q[j] - compensated.points[k - 1].q[j]).abs();
            if step > limits.v_max[j] * compensated.t_s * 1.5 {
                audit.continuity_violations.push(k);
                break;
            }
        }
    }
    for p in &compensated.points {
        for j in 4..dim {
            if p.dq[j].abs() > limits.v_max[j] * 1.05 || p.ddq[j].abs() > limits.a_max[j] * 1.05
            {
                audit.limit_exceeded = true;
            }
        }
    }
    audit
}

/// Per-sample end-effector pose error of an executed run.
///
/// For each sample the actual chain (simulated attitude and position from
/// `executed_states`, actual joints from `q_m_stream`) is compared against
/// the corresponding desired pose. Returns (translation m, rotation rad)
/// per sample.
pub fn evaluate_tracking(
    planned_ee: &[HomogeneousTransform],
    executed_states: &[FullState],
    q_m_stream: &[DVector<f64>],
    t_b_l0: &HomogeneousTransform,
    table: &DHTable,
) -> Result<Vec<(f64, f64)>, SimError> {
    if planned_ee.len() != executed_states.len() || planned_ee.len() != q_m_stream.len() {
        return Err(SimError::LengthMismatch {
            expected: planned_ee.len(),
            got: executed_states.len().min(q_m_stream.len()),
        });
    }
    let mut errors = Vec::with_capacity(planned_ee.len());
    for ((want, state), q) in planned_ee.iter().zip(executed_states).zip(q_m_stream) {
        let have = executed_ee_pose(state, q, t_b_l0, table);
        errors.push(pose_error(&have, want));
    }
    Ok(errors)
}

/// World pose of the end-effector implied by an executed state and the
/// joints actually commanded at that sample.
pub fn executed_ee_pose(
    state: &FullState,
    q_m: &DVector<f64>,
    t_b_l0: &HomogeneousTransform,
    table: &DHTable,
) -> HomogeneousTransform {
    let base = HomogeneousTransform::from_euler_zyx(
        state.theta_b.x,
        state.theta_b.y,
        state.theta_b.z,
        state.p_b,
    );
    let fk = forward_kinematics(table, q_m).expect("stream matches table");
    base.compose(t_b_l0).compose(&fk)
}

/// World position of the end-effector for a base pose and joint vector.
pub fn ee_world_position(
    base: &HomogeneousTransform,
    t_b_l0: &HomogeneousTransform,
    table: &DHTable,
    q: &DVector<f64>,
) -> Vector3<f64> {
    let frames = joint_frames(table, q).expect("dimensions checked upstream");
    let chain = base.compose(t_b_l0).compose(frames.last().unwrap());
    chain.translation().to_owned()
}
