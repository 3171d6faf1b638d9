//! Cascaded tracking controller and the arm-reaction disturbance model.
//!
//! Outer loop: position PID with acceleration feedforward produces a
//! translational acceleration command. The flatness map converts it to a
//! desired roll/pitch and collective thrust; an attitude PD closes the inner
//! loop. Arm joints run critically damped servo tracking with a rate limit.

use nalgebra::{DVector, Vector3, Vector4};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dynamics::{FullState, Wrench};
use super::flatness::flat_attitude;
use super::{MultirotorParams, SimError};
use crate::planner::wrap_angle;
use crate::toppra::ControlTrajectoryPoint;

/// Gains and output limits of the cascaded controller.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllerGains {
    pub kp_pos: Vector3<f64>,
    pub ki_pos: Vector3<f64>,
    pub kd_pos: Vector3<f64>,
    /// Attitude proportional gain, units 1/s² (scaled by inertia into torque).
    pub kp_att: Vector3<f64>,
    /// Attitude rate gain, units 1/s.
    pub kd_att: Vector3<f64>,
    /// Servo natural frequency, rad/s; response is critically damped.
    pub servo_omega: f64,
    /// Joint speed limit, rad/s.
    pub servo_rate_limit: f64,
    /// Commanded roll/pitch clamp, rad.
    pub max_tilt_cmd: f64,
    /// Per-axis integral clamp, m·s.
    pub max_integral: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            kp_pos: Vector3::new(9.0, 9.0, 12.0),
            ki_pos: Vector3::new(1.0, 1.0, 1.5),
            kd_pos: Vector3::new(6.0, 6.0, 7.0),
            kp_att: Vector3::new(400.0, 400.0, 120.0),
            kd_att: Vector3::new(40.0, 40.0, 25.0),
            servo_omega: 25.0,
            servo_rate_limit: 5.0,
            max_tilt_cmd: 0.6,
            max_integral: 2.0,
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<(), SimError> {
        let all = self
            .kp_pos
            .iter()
            .chain(self.ki_pos.iter())
            .chain(self.kd_pos.iter())
            .chain(self.kp_att.iter())
            .chain(self.kd_att.iter())
            .all(|&g| g >= 0.0)
            && self.servo_omega >= 0.0
            && self.servo_rate_limit > 0.0
            && self.max_tilt_cmd > 0.0
            && self.max_integral >= 0.0;
        if all {
            Ok(())
        } else {
            Err(SimError::InvalidGains)
        }
    }
}

/// Controller memory carried across control ticks.
pub(super) struct ControllerState {
    integral: Vector3<f64>,
    /// Previous desired attitude, for the rate feedforward.
    prev_att_d: Option<Vector3<f64>>,
}

impl ControllerState {
    pub fn new() -> Self {
        Self {
            integral: Vector3::zeros(),
            prev_att_d: None,
        }
    }
}

/// One control tick: rotor thrusts and commanded joint accelerations for the
/// coming period, from the current state and the reference sample.
///
/// Reference layout is the control space: (x, y, z, yaw, joints).
pub(super) fn control_tick(
    state: &FullState,
    reference: &ControlTrajectoryPoint,
    gains: &ControllerGains,
    params: &MultirotorParams,
    pinv: &nalgebra::DMatrix<f64>,
    memory: &mut ControllerState,
    t_s: f64,
) -> Result<(DVector<f64>, DVector<f64>), SimError> {
    let p_ref = Vector3::new(reference.q[0], reference.q[1], reference.q[2]);
    let v_ref = Vector3::new(reference.dq[0], reference.dq[1], reference.dq[2]);
    let a_ref = Vector3::new(reference.ddq[0], reference.ddq[1], reference.ddq[2]);
    let psi_ref = reference.q[3];

    let e_p = p_ref - state.p_b;
    let e_v = v_ref - state.v_b;
    memory.integral += e_p * t_s;
    for i in 0..3 {
        memory.integral[i] = memory.integral[i].clamp(-gains.max_integral, gains.max_integral);
    }
    let accel_cmd = a_ref
        + Vector3::new(
            gains.kp_pos.x * e_p.x + gains.kd_pos.x * e_v.x + gains.ki_pos.x * memory.integral.x,
            gains.kp_pos.y * e_p.y + gains.kd_pos.y * e_v.y + gains.ki_pos.y * memory.integral.y,
            gains.kp_pos.z * e_p.z + gains.kd_pos.z * e_v.z + gains.ki_pos.z * memory.integral.z,
        );

    let (phi_d, theta_d, _) = flat_attitude(&accel_cmd, psi_ref, params)?;
    let phi_d = phi_d.clamp(-gains.max_tilt_cmd, gains.max_tilt_cmd);
    let theta_d = theta_d.clamp(-gains.max_tilt_cmd, gains.max_tilt_cmd);
    // Collective thrust is projected on the actual tilt, not the commanded
    // one, so the vertical force balance stays exact while the attitude loop
    // is still converging; the two agree once the tilt has settled.
    let tilt_cos = (state.theta_b.x.cos() * state.theta_b.y.cos()).max(0.25);
    let u1 = (params.mass * (params.gravity + accel_cmd.z) / tilt_cos).max(0.0);

    let att_d = Vector3::new(phi_d, theta_d, psi_ref);
    let e_att = Vector3::new(
        wrap_angle(att_d.x - state.theta_b.x),
        wrap_angle(att_d.y - state.theta_b.y),
        wrap_angle(att_d.z - state.theta_b.z),
    );
    // rate feedforward from differencing the desired attitude; treated as
    // body rates, valid inside the small-tilt envelope the clamp enforces
    let rate_ff = match memory.prev_att_d {
        Some(prev) => {
            Vector3::new(
                wrap_angle(att_d.x - prev.x),
                wrap_angle(att_d.y - prev.y),
                wrap_angle(att_d.z - prev.z),
            ) / t_s
        }
        None => Vector3::zeros(),
    };
    memory.prev_att_d = Some(att_d);
    let rate_err = rate_ff - state.omega_b;
    let torque = Vector3::new(
        params.inertia_diag.x * (gains.kp_att.x * e_att.x + gains.kd_att.x * rate_err.x),
        params.inertia_diag.y * (gains.kp_att.y * e_att.y + gains.kd_att.y * rate_err.y),
        params.inertia_diag.z * (gains.kp_att.z * e_att.z + gains.kd_att.z * rate_err.z),
    );
    let forces = params.allocate(pinv, &Vector4::new(u1, torque.x, torque.y, torque.z));

    let joints = state.q_m.len();
    let mut joint_accels = DVector::zeros(joints);
    for i in 0..joints {
        let q_ref = reference.q[4 + i];
        let dq_ref = reference.dq[4 + i];
        let ddq_ref = reference.ddq[4 + i];
        let w = gains.servo_omega;
        let mut a = ddq_ref + w * w * (q_ref - state.q_m[i]) + 2.0 * w * (dq_ref - state.dq_m[i]);
        // keep the joint speed within the servo rate limit over this period
        let r = gains.servo_rate_limit;
        a = a.clamp((-r - state.dq_m[i]) / t_s, (r - state.dq_m[i]) / t_s);
        joint_accels[i] = a;
    }
    Ok((forces, joint_accels))
}

/// Bounded random-walk stand-in for the arm-on-base reaction wrench.
///
/// Each control tick the wrench takes a uniform step and is clamped to the
/// stated bounds; the draw sequence is fully determined by the seed.
#[derive(Clone, Debug, PartialEq)]
pub struct DisturbanceModel {
    /// Per-axis force bound, N.
    pub max_force: f64,
    /// Per-axis torque bound, N·m.
    pub max_torque: f64,
    pub seed: u64,
}

impl DisturbanceModel {
    pub fn disabled() -> Self {
        Self {
            max_force: 0.0,
            max_torque: 0.0,
            seed: 0,
        }
    }

    pub fn is_disabled(&self) -> bool {
        self.max_force == 0.0 && self.max_torque == 0.0
    }
}

pub(super) struct DisturbanceState {
    rng: ChaCha8Rng,
    wrench: Wrench,
}

impl DisturbanceState {
    pub fn new(model: &DisturbanceModel) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            wrench: Wrench::default(),
        }
    }

    /// Advances the walk one control tick and returns the wrench to hold.
    pub fn tick(&mut self, model: &DisturbanceModel) -> Wrench {
        if model.is_disabled() {
            return Wrench::default();
        }
        let step_f = 0.25 * model.max_force;
        let step_t = 0.25 * model.max_torque;
        for i in 0..3 {
            if model.max_force > 0.0 {
                self.wrench.force[i] = (self.wrench.force[i]
                    + self.rng.random_range(-step_f..=step_f))
                .clamp(-model.max_force, model.max_force);
            }
            if model.max_torque > 0.0 {
                self.wrench.torque[i] = (self.wrench.torque[i]
                    + self.rng.random_range(-step_t..=step_t))
                .clamp(-model.max_torque, model.max_torque);
            }
        }
        self.wrench.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_gains_validate() {
        assert!(ControllerGains::default().validate().is_ok());
        let mut bad = ControllerGains::default();
        bad.kp_pos.x = -1.0;
        assert_eq!(bad.validate().unwrap_err(), SimError::InvalidGains);
    }

    #[test]
    fn disturbance_walk_is_seeded_and_bounded() {
        let model = DisturbanceModel {
            max_force: 0.2,
            max_torque: 0.02,
            seed: 99,
        };
        let mut a = DisturbanceState::new(&model);
        let mut b = DisturbanceState::new(&model);
        for _ in 0..500 {
            let wa = a.tick(&model);
            let wb = b.tick(&model);
            assert_eq!(wa, wb);
            assert!(wa.force.amax() <= 0.2);
            assert!(wa.torque.amax() <= 0.02);
        }
    }

    #[test]
    fn disabled_disturbance_is_exactly_zero() {
        let model = DisturbanceModel::disabled();
        let mut s = DisturbanceState::new(&model);
        for _ in 0..10 {
            assert_eq!(s.tick(&model), Wrench::default());
        }
    }
}
