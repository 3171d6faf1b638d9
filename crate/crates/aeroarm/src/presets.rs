//! The reference vehicle: a symmetric hexarotor carrying a 3-joint probe
//! arm, with the numbers used across the test suite, the benchmarks, and
//! the bundled scenarios.

use nalgebra::Vector3;
use std::f64::consts::PI;

use crate::kinematics::{DHRow, DHTable, HomogeneousTransform, JointKind};
use crate::planner::RobotGeometry;
use crate::sim::MultirotorParams;

/// Serial arm for insertion tasks: shoulder yaw, shoulder pitch, a fixed
/// reorientation row, and a roll joint carrying the 0.4 m probe.
///
/// The three link displacements are collinear at the zero configuration,
/// so the probe always points radially away from the shoulder.
pub fn probe_arm() -> DHTable {
    DHTable::new(vec![
        DHRow {
            theta_offset: PI / 2.0,
            d: 0.0,
            alpha: 3.0 * PI / 2.0,
            a: 0.1365,
            joint_kind: JointKind::Rotational,
        },
        DHRow {
            theta_offset: 0.0,
            d: 0.0,
            alpha: 0.0,
            a: 0.0725,
            joint_kind: JointKind::Rotational,
        },
        DHRow {
            theta_offset: 3.0 * PI / 2.0,
            d: 0.0,
            alpha: 3.0 * PI / 2.0,
            a: 0.0,
            joint_kind: JointKind::Fixed,
        },
        DHRow {
            theta_offset: 0.0,
            d: 0.4,
            alpha: 0.0,
            a: 0.0,
            joint_kind: JointKind::Rotational,
        },
    ])
}

/// Pose of the arm base frame in the body frame.
///
/// The base frame is yawed -90 degrees and shifted back along body x so the
/// shoulder sits exactly at the body origin. With [`probe_arm`], all three
/// joint axes then pass through the vehicle center: shoulder yaw about body
/// z, shoulder pitch about body y, probe roll radially through the origin.
/// Any roll/pitch attitude error therefore lands inside the arm's own
/// rotation group and can be undone exactly (within joint limits), which is
/// what makes end-effector compensation effective on this vehicle.
pub fn arm_mount() -> HomogeneousTransform {
    // body translation (-0.1365, 0, 0) expressed before the yaw
    HomogeneousTransform::from_euler_zyx(0.0, 0.0, -PI / 2.0, Vector3::new(-0.1365, 0.0, 0.0))
}

/// Distance from the shoulder pitch axis to the end-effector at the zero
/// configuration: the lever arm that converts base tilt into end-effector
/// displacement when the arm does not compensate.
pub const SHOULDER_TO_EE: f64 = 0.0725 + 0.4;

/// Collision model of the mounted vehicle: body sphere plus one capsule per
/// arm link.
pub fn reference_geometry() -> RobotGeometry {
    RobotGeometry {
        uav_radius: 0.4,
        link_radii: vec![0.03; 4],
        table: probe_arm(),
        t_b_l0: arm_mount(),
    }
}

/// Symmetric hexarotor with the inertia and rotor layout used by the
/// bundled scenarios.
pub fn reference_hexarotor() -> MultirotorParams {
    MultirotorParams::symmetric(6, 3.5, Vector3::new(0.21, 0.22, 0.36), 0.30, 0.016, 16.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;

    use crate::kinematics::{forward_kinematics, joint_frames};

    #[test]
    fn shoulder_sits_at_the_body_origin() {
        let frames = joint_frames(&probe_arm(), &dvector![0.0, 0.0, 0.0]).unwrap();
        // frames[0] is the arm base; frames[1] carries the shoulder pitch axis
        let shoulder = arm_mount().compose(&frames[1]);
        assert_abs_diff_eq!(
            shoulder.translation().to_owned(),
            Vector3::zeros(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn probe_extends_along_body_x_at_zero() {
        let fk = forward_kinematics(&probe_arm(), &dvector![0.0, 0.0, 0.0]).unwrap();
        let ee = arm_mount().compose(&fk);
        assert_abs_diff_eq!(
            ee.translation().to_owned(),
            Vector3::new(SHOULDER_TO_EE, 0.0, 0.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn pitch_joint_axis_is_body_y() {
        let frames = joint_frames(&probe_arm(), &dvector![0.0, 0.0, 0.0]).unwrap();
        // joint 2 rotates about the z-axis of the frame its row follows
        let axis = arm_mount().rotation() * frames[1].rotation().column(2).into_owned();
        assert_abs_diff_eq!(axis, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn end_effector_stays_on_the_shoulder_sphere() {
        // the links distal of the shoulder are collinear, so the probe tip
        // keeps a fixed distance from the (q1-dependent) shoulder position
        for q2 in [-1.0, -0.3, 0.4, 1.2] {
            for q1 in [-0.8, 0.0, 0.9] {
                let q = dvector![q1, q2, 0.3];
                let frames = joint_frames(&probe_arm(), &q).unwrap();
                let shoulder = arm_mount().compose(&frames[1]);
                let ee = arm_mount().compose(frames.last().unwrap());
                assert_abs_diff_eq!(
                    (ee.translation() - shoulder.translation()).norm(),
                    SHOULDER_TO_EE,
                    epsilon = 1e-12
                );
            }
        }
    }
}
