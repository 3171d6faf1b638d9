//! Rigid-body dynamics of the vehicle with servo-driven joints.

use nalgebra::{DVector, Rotation3, Vector3};

use super::{MultirotorParams, SimError};

/// Complete dynamic state: base rigid body plus arm joints.
#[derive(Clone, Debug, PartialEq)]
pub struct FullState {
    pub p_b: Vector3<f64>,
    pub v_b: Vector3<f64>,
    /// Z-Y-X Euler angles (roll, pitch, yaw).
    pub theta_b: Vector3<f64>,
    /// Body-frame angular velocity (p, q, r).
    pub omega_b: Vector3<f64>,
    pub q_m: DVector<f64>,
    pub dq_m: DVector<f64>,
}

impl FullState {
    pub fn at_rest(p_b: Vector3<f64>, psi: f64, q_m: DVector<f64>) -> Self {
        let joints = q_m.len();
        Self {
            p_b,
            v_b: Vector3::zeros(),
            theta_b: Vector3::new(0.0, 0.0, psi),
            omega_b: Vector3::zeros(),
            q_m,
            dq_m: DVector::zeros(joints),
        }
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_euler_angles(self.theta_b.x, self.theta_b.y, self.theta_b.z)
    }

    fn axpy(&self, rate: &StateRate, dt: f64) -> FullState {
        FullState {
            p_b: self.p_b + rate.dp * dt,
            v_b: self.v_b + rate.dv * dt,
            theta_b: self.theta_b + rate.dtheta * dt,
            omega_b: self.omega_b + rate.domega * dt,
            q_m: &self.q_m + &rate.dq * dt,
            dq_m: &self.dq_m + &rate.ddq * dt,
        }
    }

    fn is_finite(&self) -> bool {
        self.p_b.iter().all(|v| v.is_finite())
            && self.v_b.iter().all(|v| v.is_finite())
            && self.theta_b.iter().all(|v| v.is_finite())
            && self.omega_b.iter().all(|v| v.is_finite())
            && self.q_m.iter().all(|v| v.is_finite())
            && self.dq_m.iter().all(|v| v.is_finite())
    }
}

/// External force and torque applied to the base, world and body frame
/// respectively. Stands in for the arm-on-base reaction.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

struct StateRate {
    dp: Vector3<f64>,
    dv: Vector3<f64>,
    dtheta: Vector3<f64>,
    domega: Vector3<f64>,
    dq: DVector<f64>,
    ddq: DVector<f64>,
}

/// Time derivative of the state under the given rotor thrusts, commanded
/// joint accelerations, and external wrench.
fn derivative(
    state: &FullState,
    u: &nalgebra::Vector4<f64>,
    joint_accels: &DVector<f64>,
    wrench: &Wrench,
    params: &MultirotorParams,
) -> StateRate {
    let r = state.rotation();
    let thrust_world = r * Vector3::new(0.0, 0.0, u[0]);
    let dv = (thrust_world + wrench.force) / params.mass
        - Vector3::new(0.0, 0.0, params.gravity);

    let (phi, theta) = (state.theta_b.x, state.theta_b.y);
    let (sp, cp) = phi.sin_cos();
    let tt = theta.tan();
    let ct = theta.cos();
    let w = state.omega_b;
    // Euler-angle kinematics for the Z-Y-X convention
    let dtheta = Vector3::new(
        w.x + sp * tt * w.y + cp * tt * w.z,
        cp * w.y - sp * w.z,
        (sp * w.y + cp * w.z) / ct,
    );

    let inertia = params.inertia_diag;
    let i_omega = Vector3::new(inertia.x * w.x, inertia.y * w.y, inertia.z * w.z);
    let torque = Vector3::new(u[1], u[2], u[3]) + wrench.torque - w.cross(&i_omega);
    let domega = Vector3::new(
        torque.x / inertia.x,
        torque.y / inertia.y,
        torque.z / inertia.z,
    );

    StateRate {
        dp: state.v_b,
        dv,
        dtheta,
        domega,
        dq: state.dq_m.clone(),
        ddq: joint_accels.clone(),
    }
}

/// Advances the state by `dt` with one RK4 step.
///
/// Rotor forces map through the mixing matrix to collective thrust and body
/// moments; joints integrate the commanded accelerations directly. Divergence
/// (tilt at or past pi/2, leaving the workspace sphere, or non-finite state)
/// is an error carrying no timestamp; callers attach their clock.
pub fn step_dynamics(
    state: &FullState,
    rotor_forces: &DVector<f64>,
    joint_accels: &DVector<f64>,
    wrench: &Wrench,
    params: &MultirotorParams,
    dt: f64,
) -> Result<FullState, SimError> {
    assert!(dt > 0.0 && dt <= 0.02);
    assert_eq!(rotor_forces.len(), params.rotor_count);
    let u4 = &params.mixing_matrix * rotor_forces;
    let u = nalgebra::Vector4::new(u4[0], u4[1], u4[2], u4[3]);

    let k1 = derivative(state, &u, joint_accels, wrench, params);
    let s2 = state.axpy(&k1, dt / 2.0);
    let k2 = derivative(&s2, &u, joint_accels, wrench, params);
    let s3 = state.axpy(&k2, dt / 2.0);
    let k3 = derivative(&s3, &u, joint_accels, wrench, params);
    let s4 = state.axpy(&k3, dt);
    let k4 = derivative(&s4, &u, joint_accels, wrench, params);

    let next = FullState {
        p_b: state.p_b + (k1.dp + k2.dp * 2.0 + k3.dp * 2.0 + k4.dp) * (dt / 6.0),
        v_b: state.v_b + (k1.dv + k2.dv * 2.0 + k3.dv * 2.0 + k4.dv) * (dt / 6.0),
        theta_b: state.theta_b
            + (k1.dtheta + k2.dtheta * 2.0 + k3.dtheta * 2.0 + k4.dtheta) * (dt / 6.0),
        omega_b: state.omega_b
            + (k1.domega + k2.domega * 2.0 + k3.domega * 2.0 + k4.domega) * (dt / 6.0),
        q_m: &state.q_m + (&k1.dq + &k2.dq * 2.0 + &k3.dq * 2.0 + &k4.dq) * (dt / 6.0),
        dq_m: &state.dq_m + (&k1.ddq + &k2.ddq * 2.0 + &k3.ddq * 2.0 + &k4.ddq) * (dt / 6.0),
    };

    let tilt_ok = next.theta_b.x.abs() < std::f64::consts::FRAC_PI_2
        && next.theta_b.y.abs() < std::f64::consts::FRAC_PI_2;
    if !next.is_finite() || !tilt_ok || next.p_b.norm() > params.workspace_radius {
        return Err(SimError::StateDivergence { t: f64::NAN });
    }
    Ok(next)
}
