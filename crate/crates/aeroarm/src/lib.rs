//! Trajectory planning for aerial manipulators: a multirotor carrying a
//! serial arm.
//!
//! The pipeline has three stages. [`planner`] searches the control space
//! (UAV position, yaw, arm joints) for an obstacle-free piecewise-straight
//! path. [`toppra`] turns that path into a time-optimal trajectory under
//! per-coordinate velocity and acceleration limits. Because a multirotor
//! cannot translate without tilting, the planned end-effector pose is
//! disturbed by the roll and pitch the vehicle actually flies with;
//! [`sim`] predicts that attitude by executing the trajectory against a
//! rigid-body model, and [`compensation`] rewrites the arm joint trajectory
//! through inverse kinematics so the end-effector holds its planned pose
//! anyway.
//!
//! [`kinematics`] supplies the shared transform algebra and the
//! Denavit-Hartenberg chain; [`csvio`] reads and writes the artifact
//! formats with lossless float round-tripping.

pub mod compensation;
pub mod csvio;
pub mod kinematics;
pub mod planner;
pub mod presets;
pub mod sim;
pub mod toppra;

pub use compensation::{
    audit_compensation, compensate, desired_ee_poses, evaluate_tracking, executed_ee_pose,
    CompensationAudit, CompensationResult,
};
pub use csvio::{
    errors_from_csv, errors_to_csv, path_from_csv, path_to_csv, sim_trace_from_csv,
    sim_trace_to_csv, trajectory_from_csv, trajectory_to_csv, CsvError, ErrorRow, SimTraceRow,
};
pub use kinematics::{
    chain_world_to_ee, dh_transform, forward_kinematics, inverse_kinematics, joint_frames,
    pose_error, DHRow, DHTable, HomogeneousTransform, IKOptions, IKResult, JointKind,
    KinematicsError, ManipulatorState,
};
pub use planner::{
    collision_check_config, collision_check_segment, plan_path, shortcut_path, ControlSpacePoint,
    ObstacleSet, Path, PlannerError, Primitive, RRTStarParams, RobotGeometry,
};
pub use sim::{
    enrich_trajectory, feasibility_check, flat_attitude, simulate_tracking, step_dynamics,
    ControllerGains, DisturbanceModel, FeasibilityReport, FullState, FullTrajectoryPoint,
    MultirotorParams, SimError, Wrench,
};
pub use toppra::{
    backward_pass, fit_geometric_path, forward_pass, parametrize, sample_trajectory,
    second_order_bounds, ControlTrajectoryPoint, ControllableSets, GeometricPath,
    KinodynamicLimits, SampledTrajectory, SpeedProfile, ToppError,
};
