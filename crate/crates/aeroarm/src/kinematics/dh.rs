use nalgebra::{DVector, Matrix3, Vector3};

use super::{HomogeneousTransform, KinematicsError};

/// How a Denavit-Hartenberg row responds to its joint variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointKind {
    /// Joint variable adds to `theta_offset`.
    Rotational,
    /// Joint variable adds to `d`.
    Prismatic,
    /// Constant transform; the joint variable is ignored.
    Fixed,
}

/// One Denavit-Hartenberg row: Rot_z(theta) Trans_z(d) Trans_x(a) Rot_x(alpha).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DHRow {
    pub theta_offset: f64,
    pub d: f64,
    pub alpha: f64,
    pub a: f64,
    pub joint_kind: JointKind,
}

/// Ordered Denavit-Hartenberg rows defining a serial chain.
#[derive(Clone, Debug, PartialEq)]
pub struct DHTable {
    rows: Vec<DHRow>,
}

/// Joint position vector, one entry per non-fixed row, in row order.
pub type ManipulatorState = DVector<f64>;

impl DHTable {
    pub fn new(rows: Vec<DHRow>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[DHRow] {
        &self.rows
    }

    /// Number of non-fixed rows (the dimension of [`ManipulatorState`]).
    pub fn actuated_count(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.joint_kind != JointKind::Fixed)
            .count()
    }

    /// Upper bound on the end-effector distance from the chain origin.
    pub fn reach_bound(&self) -> f64 {
        self.rows.iter().map(|r| r.a.abs() + r.d.abs()).sum()
    }

    fn check_dimension(&self, q: &ManipulatorState) -> Result<(), KinematicsError> {
        let expected = self.actuated_count();
        if q.len() != expected {
            return Err(KinematicsError::DimensionMismatch {
                expected,
                got: q.len(),
            });
        }
        Ok(())
    }
}

/// Transform contributed by one row at joint value `q`.
///
/// Fixed rows ignore `q`; rotational rows add it to theta, prismatic rows to
/// d. The product Rot_z Trans_z Trans_x Rot_x is written out in closed form.
pub fn dh_transform(row: &DHRow, q: f64) -> HomogeneousTransform {
    let theta = row.theta_offset
        + match row.joint_kind {
            JointKind::Rotational => q,
            _ => 0.0,
        };
    let d = row.d
        + match row.joint_kind {
            JointKind::Prismatic => q,
            _ => 0.0,
        };
    let (st, ct) = theta.sin_cos();
    let (sa, ca) = row.alpha.sin_cos();
    let rotation = Matrix3::new(
        ct,
        -st * ca,
        st * sa,
        st,
        ct * ca,
        -ct * sa,
        0.0,
        sa,
        ca,
    );
    let translation = Vector3::new(row.a * ct, row.a * st, d);
    HomogeneousTransform::new(rotation, translation)
}

/// Cumulative transforms along the chain: element i is the pose of frame i
/// relative to the chain base (element 0 is the identity, the last element
/// is the end-effector pose). Needed by the Jacobian and collision models.
pub fn joint_frames(
    table: &DHTable,
    q: &ManipulatorState,
) -> Result<Vec<HomogeneousTransform>, KinematicsError> {
    table.check_dimension(q)?;
    let mut frames = Vec::with_capacity(table.rows().len() + 1);
    let mut acc = HomogeneousTransform::identity();
    frames.push(acc);
    let mut qi = q.iter();
    for row in table.rows() {
        let value = if row.joint_kind == JointKind::Fixed {
            0.0
        } else {
            *qi.next().expect("dimension checked above")
        };
        acc = acc.compose(&dh_transform(row, value));
        frames.push(acc);
    }
    Ok(frames)
}

/// End-effector pose relative to the chain base: the ordered product of all
/// row transforms.
pub fn forward_kinematics(
    table: &DHTable,
    q: &ManipulatorState,
) -> Result<HomogeneousTransform, KinematicsError> {
    Ok(*joint_frames(table, q)?.last().expect("frames never empty"))
}

/// Full chain: world -> UAV body -> manipulator base -> end-effector.
pub fn chain_world_to_ee(
    t_w_b: &HomogeneousTransform,
    t_b_l0: &HomogeneousTransform,
    table: &DHTable,
    q: &ManipulatorState,
) -> Result<HomogeneousTransform, KinematicsError> {
    Ok(t_w_b
        .compose(t_b_l0)
        .compose(&forward_kinematics(table, q)?))
}
