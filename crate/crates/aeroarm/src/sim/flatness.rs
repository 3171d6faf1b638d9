//! Attitude and thrust recovery from commanded acceleration.
//!
//! A multirotor can only accelerate along its body z-axis, so a desired
//! translational acceleration fixes roll and pitch once yaw is chosen: the
//! body z-axis must align with accel + g·e_z. This is the differential
//! flatness property that lets the planner ignore roll and pitch and still
//! predict them afterwards.

use nalgebra::Vector3;

use super::{MultirotorParams, SimError};
use crate::toppra::SampledTrajectory;

/// Roll, pitch, and collective thrust realizing `accel_cmd` at yaw `psi`.
///
/// Angles follow the Z-Y-X convention: the returned (phi, theta) satisfy
/// Rz(psi)·Ry(theta)·Rx(phi)·e_z ∥ accel_cmd + g·e_z.
pub fn flat_attitude(
    accel_cmd: &Vector3<f64>,
    psi: f64,
    params: &MultirotorParams,
) -> Result<(f64, f64, f64), SimError> {
    let g = params.gravity;
    let thrust_dir = accel_cmd + Vector3::new(0.0, 0.0, g);
    let norm = thrust_dir.norm();
    if norm <= 0.1 * g {
        return Err(SimError::FlatnessSingularity { accel_norm: norm });
    }
    // express the required z-axis in the yaw-aligned frame
    let (s, c) = psi.sin_cos();
    let b = Vector3::new(
        c * thrust_dir.x + s * thrust_dir.y,
        -s * thrust_dir.x + c * thrust_dir.y,
        thrust_dir.z,
    ) / norm;
    let phi = -b.y.asin();
    let theta = b.x.atan2(b.z);
    Ok((phi, theta, params.mass * norm))
}

/// Per-sample feasibility of a planned trajectory: tilt required by the
/// acceleration stream and quasi-static rotor thrusts.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport {
    /// Sample indices whose required tilt exceeds the bound.
    pub tilt_violations: Vec<usize>,
    /// Sample indices whose rotor thrusts leave [0, f_max].
    pub thrust_violations: Vec<usize>,
    /// Samples where the flatness map itself is singular (free fall).
    pub singular_samples: Vec<usize>,
    pub max_tilt: f64,
    pub max_rotor_thrust: f64,
}

impl FeasibilityReport {
    pub fn is_clean(&self) -> bool {
        self.tilt_violations.is_empty()
            && self.thrust_violations.is_empty()
            && self.singular_samples.is_empty()
    }
}

/// Checks every sample of a planned trajectory against a tilt bound and the
/// rotor thrust range. Report-only; callers decide what to do.
///
/// Trajectory layout: control-space coordinates (x, y, z, yaw, joints), so
/// the translational acceleration is the first three ddq entries.
pub fn feasibility_check(
    traj: &SampledTrajectory,
    params: &MultirotorParams,
    max_tilt: f64,
) -> FeasibilityReport {
    let pinv = params.mixing_pinv();
    let mut report = FeasibilityReport {
        tilt_violations: Vec::new(),
        thrust_violations: Vec::new(),
        singular_samples: Vec::new(),
        max_tilt: 0.0,
        max_rotor_thrust: 0.0,
    };
    for (k, p) in traj.points.iter().enumerate() {
        let accel = Vector3::new(p.ddq[0], p.ddq[1], p.ddq[2]);
        match flat_attitude(&accel, p.q[3], params) {
            Err(_) => report.singular_samples.push(k),
            Ok((phi, theta, u1)) => {
                let tilt = phi.abs().max(theta.abs());
                report.max_tilt = report.max_tilt.max(tilt);
                if tilt > max_tilt {
                    report.tilt_violations.push(k);
                }
                let f = &pinv
                    * nalgebra::DVector::from_column_slice(&[u1, 0.0, 0.0, 0.0]);
                let largest = f.iter().cloned().fold(0.0f64, f64::max);
                report.max_rotor_thrust = report.max_rotor_thrust.max(largest);
                if f.iter().any(|&v| v < -1e-9 || v > params.f_max) {
                    report.thrust_violations.push(k);
                }
            }
        }
    }
    report
}
