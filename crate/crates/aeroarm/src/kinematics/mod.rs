//! Rigid-body transform algebra, Denavit-Hartenberg forward kinematics, and
//! damped-least-squares inverse kinematics for the manipulator chain.

mod dh;
mod ik;
mod transform;

pub use dh::{
    chain_world_to_ee, dh_transform, forward_kinematics, joint_frames, DHRow, DHTable, JointKind,
    ManipulatorState,
};
pub use ik::{inverse_kinematics, IKOptions, IKResult};
pub use transform::{pose_error, HomogeneousTransform};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KinematicsError {
    #[error("joint vector has {got} entries, table expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[cfg(test)]
pub(crate) mod testing {
    /// The arm used across the test suite.
    pub use crate::presets::probe_arm as test_arm;
}
