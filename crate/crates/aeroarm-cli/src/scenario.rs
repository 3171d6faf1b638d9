//! Scenario files: one JSON document describing a complete planning problem.
//!
//! The format is strict (unknown fields are rejected, `schema_version` is
//! mandatory) so that a typo fails loudly instead of silently falling back
//! to a default. Optional sections fall back to the documented defaults.
//! All quantities are SI; angles are radians.

use std::f64::consts::PI;
use std::path::{Path as FsPath, PathBuf};

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use aeroarm::{
    ControlSpacePoint, ControllerGains, DHRow, DHTable, DisturbanceModel, HomogeneousTransform,
    IKOptions, JointKind, KinodynamicLimits, MultirotorParams, ObstacleSet, Primitive,
    RRTStarParams, RobotGeometry,
};

/// Failure loading or validating a scenario file.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema_version {got} (this build reads version 1)")]
    SchemaVersion { got: u32 },
    #[error("need at least 2 waypoints, got {got}")]
    WaypointCount { got: usize },
    #[error("waypoint {index} has dimension {got}, expected {expected} (x, y, z, psi plus {joints} joints)")]
    WaypointDimension {
        index: usize,
        expected: usize,
        got: usize,
        joints: usize,
    },
    #[error("{field} has dimension {got}, expected {expected}")]
    FieldDimension {
        field: String,
        expected: usize,
        got: usize,
    },
    #[error("{field} must be positive, got {got}")]
    NonPositive { field: String, got: f64 },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("dt_sim = {dt_sim} must divide t_s = {t_s} a whole number of times")]
    BadTimeStep { t_s: f64, dt_sim: f64 },
}

/// On-disk scenario document. [`ScenarioFile::resolve`] turns it into typed
/// pipeline inputs with defaults filled in.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    /// Control-space rows `[x, y, z, psi, q1..qM]`.
    pub waypoints: Vec<Vec<f64>>,
    #[serde(default)]
    pub obstacles: Vec<PrimitiveSpec>,
    /// Safety margin added to every obstacle, meters.
    #[serde(default)]
    pub obstacle_inflation: f64,
    pub arm: ArmSpec,
    #[serde(default)]
    pub geometry: Option<GeometrySpec>,
    pub limits: LimitsSpec,
    pub vehicle: VehicleSpec,
    #[serde(default)]
    pub gains: Option<GainsSpec>,
    #[serde(default)]
    pub disturbance: Option<DisturbanceSpec>,
    #[serde(default)]
    pub seeds: SeedsSpec,
    /// Trajectory sample period, seconds.
    #[serde(default = "default_t_s")]
    pub t_s: f64,
    /// Integration step, seconds; defaults to `t_s / 4`.
    #[serde(default)]
    pub dt_sim: Option<f64>,
    /// Parametrization grid resolution.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub planner: Option<PlannerSpec>,
    #[serde(default)]
    pub ik: Option<IkSpec>,
    /// Tilt threshold for the pre-flight feasibility warning, radians.
    #[serde(default = "default_max_tilt")]
    pub max_tilt: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_t_s() -> f64 {
    0.01
}

fn default_grid_points() -> usize {
    400
}

fn default_max_tilt() -> f64 {
    0.6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveSpec {
    Box(BoxSpec),
    Cylinder(CylinderSpec),
}

/// Axis-aligned box between two corners.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

/// Vertical cylinder.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderSpec {
    pub center: [f64; 2],
    pub z_min: f64,
    pub z_max: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSpec {
    pub dh_rows: Vec<DhRowSpec>,
    /// Arm base position in the body frame, meters.
    pub mount_translation: [f64; 3],
    /// Arm base orientation in the body frame: roll, pitch, yaw.
    pub mount_rpy: [f64; 3],
    /// Per actuated joint `[lo, hi]`, radians. Omitted means unlimited.
    #[serde(default)]
    pub joint_limits: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DhRowSpec {
    pub theta_offset: f64,
    pub d: f64,
    pub alpha: f64,
    pub a: f64,
    pub kind: JointKindSpec,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKindSpec {
    Rotational,
    Prismatic,
    Fixed,
}

impl From<JointKindSpec> for JointKind {
    fn from(k: JointKindSpec) -> Self {
        match k {
            JointKindSpec::Rotational => JointKind::Rotational,
            JointKindSpec::Prismatic => JointKind::Prismatic,
            JointKindSpec::Fixed => JointKind::Fixed,
        }
    }
}

/// Collision geometry; defaults to a 0.4 m body sphere and 0.03 m links.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub uav_radius: f64,
    pub link_radii: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSpec {
    /// Per coordinate `[x, y, z, psi, q1..qM]`.
    pub v_max: Vec<f64>,
    pub a_max: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub mass: f64,
    pub inertia_diag: [f64; 3],
    pub rotor_count: usize,
    pub boom_length: f64,
    /// Rotor drag-moment to thrust ratio.
    pub c_m: f64,
    /// Per-rotor thrust ceiling, newtons.
    pub f_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSpec {
    pub kp_pos: [f64; 3],
    pub ki_pos: [f64; 3],
    pub kd_pos: [f64; 3],
    pub kp_att: [f64; 3],
    pub kd_att: [f64; 3],
    pub servo_omega: f64,
    pub servo_rate_limit: f64,
    pub max_tilt_cmd: f64,
    pub max_integral: f64,
}

/// Bounded random wrench walk; omitted means no disturbance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub max_force: f64,
    pub max_torque: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedsSpec {
    #[serde(default = "default_seed")]
    pub planner: u64,
    #[serde(default = "default_seed")]
    pub disturbance: u64,
}

fn default_seed() -> u64 {
    1
}

impl Default for SeedsSpec {
    fn default() -> Self {
        Self {
            planner: 1,
            disturbance: 1,
        }
    }
}

/// Search parameter overrides; anything omitted keeps the stock value, and
/// omitted bounds are derived from the waypoint bounding box.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSpec {
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub steer_step: Option<f64>,
    #[serde(default)]
    pub goal_bias: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub collision_resolution: Option<f64>,
    #[serde(default)]
    pub shortcut_rounds: Option<usize>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub bounds_low: Option<Vec<f64>>,
    #[serde(default)]
    pub bounds_high: Option<Vec<f64>>,
}

/// Inverse-kinematics overrides; anything omitted keeps the stock value.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IkSpec {
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub damping: Option<f64>,
    #[serde(default)]
    pub translation_weight: Option<f64>,
    #[serde(default)]
    pub rotation_weight: Option<f64>,
    #[serde(default)]
    pub max_step: Option<f64>,
    #[serde(default)]
    pub accept_tol: Option<f64>,
}

/// Fully resolved pipeline inputs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub waypoints: Vec<ControlSpacePoint>,
    pub obstacles: ObstacleSet,
    pub table: DHTable,
    pub t_b_l0: HomogeneousTransform,
    pub geometry: RobotGeometry,
    pub limits: KinodynamicLimits,
    pub vehicle: MultirotorParams,
    pub gains: ControllerGains,
    pub disturbance: DisturbanceModel,
    pub rrt: RRTStarParams,
    pub ik: IKOptions,
    pub planner_seed: u64,
    pub t_s: f64,
    pub dt_sim: f64,
    pub grid_points: usize,
    pub max_tilt: f64,
    pub output_dir: Option<PathBuf>,
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &FsPath) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

/// Parses and validates scenario JSON.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.resolve()
}

fn positive(value: f64, field: &str) -> Result<f64, ScenarioError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ScenarioError::NonPositive {
            field: field.to_string(),
            got: value,
        })
    }
}

fn vector_of(values: &[f64], expected: usize, field: &str) -> Result<DVector<f64>, ScenarioError> {
    if values.len() != expected {
        return Err(ScenarioError::FieldDimension {
            field: field.to_string(),
            expected,
            got: values.len(),
        });
    }
    Ok(DVector::from_column_slice(values))
}

impl ScenarioFile {
    /// Validates the document and builds the typed inputs.
    pub fn resolve(&self) -> Result<Scenario, ScenarioError> {
        if self.schema_version != 1 {
            return Err(ScenarioError::SchemaVersion {
                got: self.schema_version,
            });
        }

        let rows: Vec<DHRow> = self
            .arm
            .dh_rows
            .iter()
            .map(|r| DHRow {
                theta_offset: r.theta_offset,
                d: r.d,
                alpha: r.alpha,
                a: r.a,
                joint_kind: r.kind.into(),
            })
            .collect();
        if rows.is_empty() {
            return Err(ScenarioError::Invalid {
                field: "arm.dh_rows".to_string(),
                message: "at least one row required".to_string(),
            });
        }
        let table = DHTable::new(rows);
        let joints = table.actuated_count();
        let dim = 4 + joints;

        if self.waypoints.len() < 2 {
            return Err(ScenarioError::WaypointCount {
                got: self.waypoints.len(),
            });
        }
        for (index, w) in self.waypoints.iter().enumerate() {
            if w.len() != dim {
                return Err(ScenarioError::WaypointDimension {
                    index,
                    expected: dim,
                    got: w.len(),
                    joints,
                });
            }
        }
        let waypoints: Vec<ControlSpacePoint> = self
            .waypoints
            .iter()
            .map(|w| ControlSpacePoint {
                p_b: Vector3::new(w[0], w[1], w[2]),
                psi: w[3],
                q_m: DVector::from_column_slice(&w[4..]),
            })
            .collect();

        let joint_limits = match &self.arm.joint_limits {
            None => None,
            Some(jl) => {
                if jl.len() != joints {
                    return Err(ScenarioError::FieldDimension {
                        field: "arm.joint_limits".to_string(),
                        expected: joints,
                        got: jl.len(),
                    });
                }
                for (index, [lo, hi]) in jl.iter().enumerate() {
                    if lo > hi {
                        return Err(ScenarioError::Invalid {
                            field: format!("arm.joint_limits[{index}]"),
                            message: format!("lo {lo} > hi {hi}"),
                        });
                    }
                }
                Some(jl.iter().map(|[lo, hi]| (*lo, *hi)).collect::<Vec<_>>())
            }
        };

        let geometry = match &self.geometry {
            Some(g) => {
                if g.link_radii.len() != self.arm.dh_rows.len() {
                    return Err(ScenarioError::FieldDimension {
                        field: "geometry.link_radii".to_string(),
                        expected: self.arm.dh_rows.len(),
                        got: g.link_radii.len(),
                    });
                }
                positive(g.uav_radius, "geometry.uav_radius")?;
                GeometrySpec {
                    uav_radius: g.uav_radius,
                    link_radii: g.link_radii.clone(),
                }
            }
            None => GeometrySpec {
                uav_radius: 0.4,
                link_radii: vec![0.03; self.arm.dh_rows.len()],
            },
        };

        let mount = HomogeneousTransform::from_euler_zyx(
            self.arm.mount_rpy[0],
            self.arm.mount_rpy[1],
            self.arm.mount_rpy[2],
            Vector3::new(
                self.arm.mount_translation[0],
                self.arm.mount_translation[1],
                self.arm.mount_translation[2],
            ),
        );

        let v_max = vector_of(&self.limits.v_max, dim, "limits.v_max")?;
        let a_max = vector_of(&self.limits.a_max, dim, "limits.a_max")?;
        for (i, v) in v_max.iter().chain(a_max.iter()).enumerate() {
            if *v <= 0.0 || !v.is_finite() {
                return Err(ScenarioError::NonPositive {
                    field: format!("limits entry {i}"),
                    got: *v,
                });
            }
        }

        positive(self.vehicle.mass, "vehicle.mass")?;
        positive(self.vehicle.boom_length, "vehicle.boom_length")?;
        positive(self.vehicle.f_max, "vehicle.f_max")?;
        for (axis, v) in ["x", "y", "z"].iter().zip(self.vehicle.inertia_diag) {
            positive(v, &format!("vehicle.inertia_diag.{axis}"))?;
        }
        if self.vehicle.rotor_count < 4 {
            return Err(ScenarioError::Invalid {
                field: "vehicle.rotor_count".to_string(),
                message: format!("need at least 4 rotors, got {}", self.vehicle.rotor_count),
            });
        }
        let vehicle = MultirotorParams::symmetric(
            self.vehicle.rotor_count,
            self.vehicle.mass,
            Vector3::new(
                self.vehicle.inertia_diag[0],
                self.vehicle.inertia_diag[1],
                self.vehicle.inertia_diag[2],
            ),
            self.vehicle.boom_length,
            self.vehicle.c_m,
            self.vehicle.f_max,
        );

        let gains = match &self.gains {
            None => ControllerGains::default(),
            Some(g) => ControllerGains {
                kp_pos: Vector3::from(g.kp_pos),
                ki_pos: Vector3::from(g.ki_pos),
                kd_pos: Vector3::from(g.kd_pos),
                kp_att: Vector3::from(g.kp_att),
                kd_att: Vector3::from(g.kd_att),
                servo_omega: g.servo_omega,
                servo_rate_limit: g.servo_rate_limit,
                max_tilt_cmd: g.max_tilt_cmd,
                max_integral: g.max_integral,
            },
        };

        let disturbance = match &self.disturbance {
            None => DisturbanceModel::disabled(),
            Some(d) => DisturbanceModel {
                max_force: d.max_force,
                max_torque: d.max_torque,
                seed: self.seeds.disturbance,
            },
        };

        let t_s = positive(self.t_s, "t_s")?;
        let dt_sim = positive(self.dt_sim.unwrap_or(t_s / 4.0), "dt_sim")?;
        let ratio = t_s / dt_sim;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
            return Err(ScenarioError::BadTimeStep { t_s, dt_sim });
        }
        if self.grid_points < 2 {
            return Err(ScenarioError::Invalid {
                field: "grid_points".to_string(),
                message: format!("need at least 2, got {}", self.grid_points),
            });
        }
        positive(self.max_tilt, "max_tilt")?;

        let rrt = self.resolve_planner(dim, &joint_limits)?;
        let ik = self.resolve_ik(joint_limits)?;

        let obstacles = ObstacleSet {
            primitives: self
                .obstacles
                .iter()
                .map(|p| match p {
                    PrimitiveSpec::Box(b) => Primitive::Box {
                        min: Vector3::from(b.min),
                        max: Vector3::from(b.max),
                    },
                    PrimitiveSpec::Cylinder(c) => Primitive::Cylinder {
                        center: nalgebra::Vector2::new(c.center[0], c.center[1]),
                        z_min: c.z_min,
                        z_max: c.z_max,
                        radius: c.radius,
                    },
                })
                .collect(),
            inflation: self.obstacle_inflation,
        };

        Ok(Scenario {
            name: self.name.clone(),
            waypoints,
            obstacles,
            table: table.clone(),
            t_b_l0: mount,
            geometry: RobotGeometry {
                uav_radius: geometry.uav_radius,
                link_radii: geometry.link_radii,
                table,
                t_b_l0: mount,
            },
            limits: KinodynamicLimits { v_max, a_max },
            vehicle,
            gains,
            disturbance,
            rrt,
            ik,
            planner_seed: self.seeds.planner,
            t_s,
            dt_sim,
            grid_points: self.grid_points,
            max_tilt: self.max_tilt,
            output_dir: self.output_dir.clone(),
        })
    }

    fn resolve_planner(
        &self,
        dim: usize,
        joint_limits: &Option<Vec<(f64, f64)>>,
    ) -> Result<RRTStarParams, ScenarioError> {
        let spec = self.planner.clone().unwrap_or_default();
        let (low, high) = match (&spec.bounds_low, &spec.bounds_high) {
            (Some(lo), Some(hi)) => (
                vector_of(lo, dim, "planner.bounds_low")?,
                vector_of(hi, dim, "planner.bounds_high")?,
            ),
            (None, None) => self.derived_bounds(dim, joint_limits),
            _ => {
                return Err(ScenarioError::Invalid {
                    field: "planner.bounds_low/bounds_high".to_string(),
                    message: "give both bounds or neither".to_string(),
                })
            }
        };
        for i in 0..dim {
            if low[i] >= high[i] {
                return Err(ScenarioError::Invalid {
                    field: format!("planner bounds axis {i}"),
                    message: format!("low {} >= high {}", low[i], high[i]),
                });
            }
        }
        let mut params = RRTStarParams::for_bounds(low, high);
        if let Some(v) = spec.max_iterations {
            params.max_iterations = v;
        }
        if let Some(v) = spec.steer_step {
            params.steer_step = positive(v, "planner.steer_step")?;
        }
        if let Some(v) = spec.goal_bias {
            if !(0.0..1.0).contains(&v) {
                return Err(ScenarioError::Invalid {
                    field: "planner.goal_bias".to_string(),
                    message: format!("must be in [0, 1), got {v}"),
                });
            }
            params.goal_bias = v;
        }
        if let Some(v) = spec.gamma {
            params.gamma = positive(v, "planner.gamma")?;
        }
        if let Some(v) = spec.collision_resolution {
            params.collision_resolution = positive(v, "planner.collision_resolution")?;
        }
        if let Some(v) = spec.shortcut_rounds {
            params.shortcut_rounds = v;
        }
        if let Some(w) = &spec.weights {
            params.weights = Some(vector_of(w, dim, "planner.weights")?);
        }
        Ok(params)
    }

    /// Sampling box when the file gives none: the waypoint bounding box
    /// padded by 2 m in position, full turn in yaw, and the joint limits
    /// (or a full turn) per joint.
    fn derived_bounds(
        &self,
        dim: usize,
        joint_limits: &Option<Vec<(f64, f64)>>,
    ) -> (DVector<f64>, DVector<f64>) {
        let mut low = DVector::from_element(dim, f64::INFINITY);
        let mut high = DVector::from_element(dim, f64::NEG_INFINITY);
        for w in &self.waypoints {
            for i in 0..dim {
                low[i] = low[i].min(w[i]);
                high[i] = high[i].max(w[i]);
            }
        }
        for i in 0..3 {
            low[i] -= 2.0;
            high[i] += 2.0;
        }
        low[3] = low[3].min(-PI);
        high[3] = high[3].max(PI);
        for j in 0..dim - 4 {
            match joint_limits {
                Some(jl) => {
                    low[4 + j] = low[4 + j].min(jl[j].0);
                    high[4 + j] = high[4 + j].max(jl[j].1);
                }
                None => {
                    low[4 + j] = low[4 + j].min(-PI);
                    high[4 + j] = high[4 + j].max(PI);
                }
            }
        }
        (low, high)
    }

    fn resolve_ik(
        &self,
        joint_limits: Option<Vec<(f64, f64)>>,
    ) -> Result<IKOptions, ScenarioError> {
        let spec = self.ik.clone().unwrap_or_default();
        let mut opts = IKOptions {
            joint_limits,
            ..IKOptions::default()
        };
        if let Some(v) = spec.tolerance {
            opts.tolerance = positive(v, "ik.tolerance")?;
        }
        if let Some(v) = spec.max_iterations {
            opts.max_iterations = v;
        }
        if let Some(v) = spec.damping {
            opts.damping = positive(v, "ik.damping")?;
        }
        if let Some(v) = spec.translation_weight {
            opts.translation_weight = positive(v, "ik.translation_weight")?;
        }
        if let Some(v) = spec.rotation_weight {
            opts.rotation_weight = positive(v, "ik.rotation_weight")?;
        }
        if let Some(v) = spec.max_step {
            opts.max_step = positive(v, "ik.max_step")?;
        }
        if let Some(v) = spec.accept_tol {
            opts.accept_tol = positive(v, "ik.accept_tol")?;
        }
        Ok(opts)
    }
}
