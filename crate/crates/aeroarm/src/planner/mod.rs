//! Sampling-based path planning over the control space: UAV position, yaw,
//! and arm joints. Roll and pitch are deliberately absent — the planner
//! assumes the vehicle flies level, and the compensation stage later fixes
//! what that assumption breaks.

mod geometry;
mod rrt;

pub use geometry::{segment_clearance, ObstacleSet, Primitive};

use nalgebra::{DVector, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kinematics::{joint_frames, DHTable, HomogeneousTransform};

/// Sample spacing used by [`shortcut_path`], in metric units.
pub const DEFAULT_RESOLUTION: f64 = 0.05;

/// One point of the planner's search space: everything the vehicle can hold
/// at equilibrium.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSpacePoint {
    pub p_b: Vector3<f64>,
    pub psi: f64,
    pub q_m: DVector<f64>,
}

impl ControlSpacePoint {
    pub fn dim(&self) -> usize {
        4 + self.q_m.len()
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        v[0] = self.p_b.x;
        v[1] = self.p_b.y;
        v[2] = self.p_b.z;
        v[3] = self.psi;
        v.rows_mut(4, self.q_m.len()).copy_from(&self.q_m);
        v
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        Self {
            p_b: Vector3::new(v[0], v[1], v[2]),
            psi: v[3],
            q_m: DVector::from_iterator(v.len() - 4, v.iter().skip(4).copied()),
        }
    }

    /// Linear interpolation; yaw takes the shortest arc.
    pub fn interpolate(a: &Self, b: &Self, tau: f64) -> Self {
        Self {
            p_b: a.p_b + (b.p_b - a.p_b) * tau,
            psi: a.psi + wrap_angle(b.psi - a.psi) * tau,
            q_m: &a.q_m + (&b.q_m - &a.q_m) * tau,
        }
    }
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

/// Default control-space metric weights: meters count in full, yaw at 0.5,
/// each arm joint at 0.3 — flight distance dominates.
pub fn default_weights(joint_count: usize) -> DVector<f64> {
    let mut w = DVector::from_element(4 + joint_count, 0.3);
    w[0] = 1.0;
    w[1] = 1.0;
    w[2] = 1.0;
    w[3] = 0.5;
    w
}

/// Weighted distance between control-space points (yaw wrapped).
pub fn metric(a: &ControlSpacePoint, b: &ControlSpacePoint, weights: &DVector<f64>) -> f64 {
    let mut acc = ((a.p_b.x - b.p_b.x) * weights[0]).powi(2)
        + ((a.p_b.y - b.p_b.y) * weights[1]).powi(2)
        + ((a.p_b.z - b.p_b.z) * weights[2]).powi(2)
        + (wrap_angle(a.psi - b.psi) * weights[3]).powi(2);
    for i in 0..a.q_m.len() {
        acc += ((a.q_m[i] - b.q_m[i]) * weights[4 + i]).powi(2);
    }
    acc.sqrt()
}

/// Collision geometry of the whole machine: a bounding sphere for the UAV
/// body plus one capsule per arm link, evaluated at zero roll/pitch.
#[derive(Clone, Debug)]
pub struct RobotGeometry {
    pub uav_radius: f64,
    /// One radius per DH row; capsule i spans chain frames i-1 to i.
    pub link_radii: Vec<f64>,
    pub table: DHTable,
    pub t_b_l0: HomogeneousTransform,
}

/// Obstacle-free piecewise-straight path through the control space.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub points: Vec<ControlSpacePoint>,
}

impl Path {
    /// Sum of segment lengths in the weighted metric.
    pub fn metric_length(&self, weights: &DVector<f64>) -> f64 {
        self.points
            .windows(2)
            .map(|w| metric(&w[0], &w[1], weights))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RRTStarParams {
    pub max_iterations: usize,
    /// Steering step in metric units.
    pub steer_step: f64,
    /// Probability of sampling the goal directly.
    pub goal_bias: f64,
    /// Rewiring radius coefficient: gamma * (ln n / n)^(1/dim).
    pub gamma: f64,
    /// Collision sample spacing along segments, metric units.
    pub collision_resolution: f64,
    /// Post-smoothing rounds applied per waypoint-pair section.
    pub shortcut_rounds: usize,
    /// Metric weights; `None` uses [`default_weights`].
    pub weights: Option<DVector<f64>>,
    /// Sampling box over the full (4 + M)-dimensional space.
    pub bounds_low: DVector<f64>,
    pub bounds_high: DVector<f64>,
}

impl RRTStarParams {
    pub fn for_bounds(bounds_low: DVector<f64>, bounds_high: DVector<f64>) -> Self {
        assert_eq!(bounds_low.len(), bounds_high.len());
        assert!(bounds_low.len() >= 4, "bounds must cover x, y, z, psi");
        Self {
            max_iterations: 20_000,
            steer_step: 0.3,
            goal_bias: 0.1,
            gamma: 2.0,
            collision_resolution: 0.05,
            shortcut_rounds: 100,
            weights: None,
            bounds_low,
            bounds_high,
        }
    }

    pub fn resolved_weights(&self) -> DVector<f64> {
        self.weights
            .clone()
            .unwrap_or_else(|| default_weights(self.bounds_low.len() - 4))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlannerError {
    #[error("waypoint {index} is in collision")]
    InvalidWaypoint { index: usize },
    #[error("no collision-free connection between waypoints {from} and {to} after {iterations} iterations")]
    PlanningTimeout {
        from: usize,
        to: usize,
        iterations: usize,
    },
    #[error("need at least 2 waypoints, got {got}")]
    NotEnoughWaypoints { got: usize },
}

/// True iff the UAV bounding sphere and every arm-link capsule clear all
/// inflated obstacles at this configuration (arm posed at zero roll/pitch).
pub fn collision_check_config(
    x: &ControlSpacePoint,
    obstacles: &ObstacleSet,
    geom: &RobotGeometry,
) -> bool {
    if obstacles.primitives.is_empty() {
        return true;
    }
    if obstacles.clearance(&x.p_b) < geom.uav_radius {
        return false;
    }
    if geom.table.rows().is_empty() {
        return true;
    }
    let base = HomogeneousTransform::from_euler_zyx(0.0, 0.0, x.psi, x.p_b).compose(&geom.t_b_l0);
    let frames = joint_frames(&geom.table, &x.q_m).expect("scenario-validated dimensions");
    let mut prev = base.translation().to_owned();
    for (i, frame) in frames.iter().skip(1).enumerate() {
        let here = base.transform_point(frame.translation());
        let radius = geom.link_radii[i];
        if segment_clearance(obstacles, &prev, &here) < radius {
            return false;
        }
        prev = here;
    }
    true
}

/// True iff every interpolated configuration along the straight segment,
/// sampled at most `resolution` apart in the weighted metric, is free.
pub fn collision_check_segment(
    a: &ControlSpacePoint,
    b: &ControlSpacePoint,
    obstacles: &ObstacleSet,
    geom: &RobotGeometry,
    resolution: f64,
) -> bool {
    assert!(resolution > 0.0);
    let weights = default_weights(a.q_m.len());
    let steps = (metric(a, b, &weights) / resolution).ceil().max(1.0) as usize;
    for k in 0..=steps {
        let tau = k as f64 / steps as f64;
        if !collision_check_config(&ControlSpacePoint::interpolate(a, b, tau), obstacles, geom) {
            return false;
        }
    }
    true
}

/// Plans an obstacle-free path visiting every waypoint in order.
///
/// Each consecutive pair is handled independently: a collision-free direct
/// segment is returned as-is (exactly the two endpoints), otherwise an RRT*
/// search runs, followed by `shortcut_rounds` of random shortcutting within
/// the section. Sections are concatenated with duplicate junctions merged.
/// Deterministic for a fixed `(inputs, seed)`.
pub fn plan_path(
    waypoints: &[ControlSpacePoint],
    obstacles: &ObstacleSet,
    geom: &RobotGeometry,
    params: &RRTStarParams,
    seed: u64,
) -> Result<Path, PlannerError> {
    if waypoints.len() < 2 {
        return Err(PlannerError::NotEnoughWaypoints {
            got: waypoints.len(),
        });
    }
    for (index, w) in waypoints.iter().enumerate() {
        if !collision_check_config(w, obstacles, geom) {
            return Err(PlannerError::InvalidWaypoint { index });
        }
    }

    let weights = params.resolved_weights();
    let mut points: Vec<ControlSpacePoint> = Vec::new();
    for (pair, pair_points) in waypoints.windows(2).enumerate() {
        let (a, b) = (&pair_points[0], &pair_points[1]);
        // decorrelate per-pair streams while keeping the whole plan a pure
        // function of (inputs, seed)
        let pair_seed = seed ^ (pair as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(pair_seed);
        let mut section = if collision_check_segment(
            a,
            b,
            obstacles,
            geom,
            params.collision_resolution,
        ) {
            vec![a.clone(), b.clone()]
        } else {
            let found = rrt::rrt_star(a, b, obstacles, geom, params, &weights, &mut rng)
                .ok_or(PlannerError::PlanningTimeout {
                    from: pair,
                    to: pair + 1,
                    iterations: params.max_iterations,
                })?;
            shortcut_section(
                found,
                obstacles,
                geom,
                params.collision_resolution,
                &mut rng,
                params.shortcut_rounds,
            )
        };
        if !points.is_empty() {
            section.remove(0);
        }
        points.extend(section);
    }
    Ok(Path { points })
}

use rand::SeedableRng;

fn shortcut_section(
    mut points: Vec<ControlSpacePoint>,
    obstacles: &ObstacleSet,
    geom: &RobotGeometry,
    resolution: f64,
    rng: &mut ChaCha8Rng,
    rounds: usize,
) -> Vec<ControlSpacePoint> {
    for _ in 0..rounds {
        if points.len() < 3 {
            break;
        }
        let i = rng.random_range(0..points.len() - 2);
        let j = rng.random_range(i + 2..points.len());
        if collision_check_segment(&points[i], &points[j], obstacles, geom, resolution) {
            points.drain(i + 1..j);
        }
    }
    points
}

/// Random shortcutting over a whole path: endpoints and collision-freeness
/// preserved, metric length never increases.
pub fn shortcut_path(
    path: &Path,
    obstacles: &ObstacleSet,
    geom: &RobotGeometry,
    seed: u64,
    rounds: usize,
) -> Path {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Path {
        points: shortcut_section(
            path.points.clone(),
            obstacles,
            geom,
            DEFAULT_RESOLUTION,
            &mut rng,
            rounds,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn arm_geometry() -> RobotGeometry {
        crate::presets::reference_geometry()
    }

    fn point(x: f64, y: f64, z: f64) -> ControlSpacePoint {
        ControlSpacePoint {
            p_b: Vector3::new(x, y, z),
            psi: 0.0,
            q_m: dvector![0.0, 0.0, 0.0],
        }
    }

    /// Flat 4-dimensional variant (no arm) for geometry-focused cases.
    fn bare_geometry() -> RobotGeometry {
        RobotGeometry {
            uav_radius: 0.4,
            link_radii: vec![],
            table: DHTable::new(vec![]),
            t_b_l0: HomogeneousTransform::identity(),
        }
    }

    fn bare_point(x: f64, y: f64, z: f64) -> ControlSpacePoint {
        ControlSpacePoint {
            p_b: Vector3::new(x, y, z),
            psi: 0.0,
            q_m: dvector![],
        }
    }

    fn wall_with_gap() -> ObstacleSet {
        ObstacleSet {
            inflation: 0.05,
            primitives: vec![
                Primitive::Box {
                    min: Vector3::new(1.9, -3.0, 0.0),
                    max: Vector3::new(2.1, 0.3, 2.5),
                },
                Primitive::Box {
                    min: Vector3::new(1.9, 1.7, 0.0),
                    max: Vector3::new(2.1, 3.0, 2.5),
                },
            ],
        }
    }

    fn bare_params() -> RRTStarParams {
        RRTStarParams::for_bounds(
            dvector![-0.5, -3.0, 0.4, -0.3],
            dvector![4.5, 3.0, 2.0, 0.3],
        )
    }

    #[test]
    fn empty_obstacle_set_is_always_free() {
        let set = ObstacleSet {
            primitives: vec![],
            inflation: 0.0,
        };
        assert!(collision_check_config(
            &point(0.0, 0.0, 0.0),
            &set,
            &arm_geometry()
        ));
    }

    #[test]
    fn point_inside_box_collides() {
        let set = ObstacleSet {
            primitives: vec![Primitive::Box {
                min: Vector3::new(-5.0, -5.0, -5.0),
                max: Vector3::new(5.0, 5.0, 5.0),
            }],
            inflation: 0.0,
        };
        assert!(!collision_check_config(
            &bare_point(0.0, 0.0, 0.0),
            &set,
            &bare_geometry()
        ));
    }

    #[test]
    fn sphere_box_margin_is_analytic() {
        // box face at x = 1; sphere radius 0.4, inflation 0.05
        let set = ObstacleSet {
            primitives: vec![Primitive::Box {
                min: Vector3::new(1.0, -1.0, -1.0),
                max: Vector3::new(2.0, 1.0, 1.0),
            }],
            inflation: 0.05,
        };
        let geom = bare_geometry();
        assert!(collision_check_config(
            &bare_point(1.0 - 0.45 - 1e-3, 0.0, 0.0),
            &set,
            &geom
        ));
        assert!(!collision_check_config(
            &bare_point(1.0 - 0.45 + 1e-3, 0.0, 0.0),
            &set,
            &geom
        ));
    }

    #[test]
    fn cylinder_margin_is_analytic() {
        let set = ObstacleSet {
            primitives: vec![Primitive::Cylinder {
                center: nalgebra::Vector2::new(0.0, 0.0),
                z_min: 0.0,
                z_max: 2.0,
                radius: 0.5,
            }],
            inflation: 0.1,
        };
        let geom = bare_geometry();
        // lateral: need 0.5 + 0.1 + 0.4 = 1.0 from the axis
        assert!(collision_check_config(&bare_point(1.0 + 1e-3, 0.0, 1.0), &set, &geom));
        assert!(!collision_check_config(&bare_point(1.0 - 1e-3, 0.0, 1.0), &set, &geom));
        // above the cap: need 0.5 above z_max
        assert!(collision_check_config(&bare_point(0.0, 0.0, 2.5 + 1e-3), &set, &geom));
        assert!(!collision_check_config(&bare_point(0.0, 0.0, 2.5 - 1e-3), &set, &geom));
    }

    #[test]
    fn arm_reach_collides_where_body_alone_would_not() {
        // thin wall ahead: the body clears it but the extended probe does not
        let set = ObstacleSet {
            primitives: vec![Primitive::Box {
                min: Vector3::new(0.43, -2.0, 0.0),
                max: Vector3::new(0.46, 2.0, 3.0),
            }],
            inflation: 0.0,
        };
        let geom = arm_geometry();
        // body sphere: clearance 0.43 - 0.4 > 0; probe tip reaches 0.4725 m
        assert!(!collision_check_config(&point(0.0, 0.0, 1.0), &set, &geom));
        // yawed away, the probe points elsewhere and the pose is free
        let mut turned = point(0.0, 0.0, 1.0);
        turned.psi = std::f64::consts::PI;
        assert!(collision_check_config(&turned, &set, &geom));
    }

    #[test]
    fn degenerate_segment_matches_config_check() {
        let set = wall_with_gap();
        let geom = bare_geometry();
        let a = bare_point(0.0, -1.5, 1.2);
        assert!(collision_check_segment(&a, &a, &set, &geom, 0.05));
    }

    #[test]
    fn segment_through_wall_is_rejected() {
        let set = wall_with_gap();
        let geom = bare_geometry();
        assert!(!collision_check_segment(
            &bare_point(0.0, -1.5, 1.2),
            &bare_point(4.0, -1.5, 1.2),
            &set,
            &geom,
            0.05
        ));
    }

    #[test]
    fn grazing_segment_matches_dense_oracle() {
        // segment passing near the gap edge: compare the production
        // resolution against a 100x denser sweep
        let set = wall_with_gap();
        let geom = bare_geometry();
        let cases = [
            (bare_point(0.0, 0.8, 1.2), bare_point(4.0, 1.2, 1.2)),
            (bare_point(0.0, 0.72, 1.2), bare_point(4.0, 0.78, 1.2)),
            (bare_point(0.0, 0.4, 1.2), bare_point(4.0, 0.9, 1.2)),
            (bare_point(0.0, -0.4, 1.2), bare_point(4.0, 1.1, 1.2)),
        ];
        for (a, b) in &cases {
            let coarse = collision_check_segment(a, b, &set, &geom, 0.05);
            let dense = collision_check_segment(a, b, &set, &geom, 0.05 / 100.0);
            assert_eq!(coarse, dense, "{a:?} -> {b:?}");
        }
    }

    #[test]
    fn direct_segment_returns_exactly_the_waypoints() {
        let set = ObstacleSet {
            primitives: vec![],
            inflation: 0.0,
        };
        let a = bare_point(0.0, 0.0, 1.0);
        let b = bare_point(3.0, 1.0, 1.5);
        let path = plan_path(
            &[a.clone(), b.clone()],
            &set,
            &bare_geometry(),
            &bare_params(),
            42,
        )
        .unwrap();
        assert_eq!(path.points, vec![a, b]);
    }

    #[test]
    fn waypoint_in_collision_is_reported_by_index() {
        let set = wall_with_gap();
        let err = plan_path(
            &[bare_point(0.0, -1.5, 1.2), bare_point(2.0, -1.5, 1.2)],
            &set,
            &bare_geometry(),
            &bare_params(),
            42,
        )
        .unwrap_err();
        assert_eq!(err, PlannerError::InvalidWaypoint { index: 1 });
    }

    #[test]
    fn too_few_waypoints_is_an_error() {
        let err = plan_path(
            &[bare_point(0.0, 0.0, 1.0)],
            &ObstacleSet {
                primitives: vec![],
                inflation: 0.0,
            },
            &bare_geometry(),
            &bare_params(),
            1,
        )
        .unwrap_err();
        assert_eq!(err, PlannerError::NotEnoughWaypoints { got: 1 });
    }

    #[test]
    fn wall_gap_is_threaded_and_audited() {
        let set = wall_with_gap();
        let geom = bare_geometry();
        let a = bare_point(0.0, -1.5, 1.2);
        let b = bare_point(4.0, -1.5, 1.2);
        let path = plan_path(&[a.clone(), b.clone()], &set, &geom, &bare_params(), 7).unwrap();
        assert!(path.points.len() >= 3);
        assert_eq!(path.points.first().unwrap(), &a);
        assert_eq!(path.points.last().unwrap(), &b);
        // post-hoc audit at a tenth of the planning resolution
        for w in path.points.windows(2) {
            assert!(collision_check_segment(&w[0], &w[1], &set, &geom, 0.005));
        }
    }

    #[test]
    fn planning_is_deterministic() {
        let set = wall_with_gap();
        let geom = bare_geometry();
        let a = bare_point(0.0, -1.5, 1.2);
        let b = bare_point(4.0, -1.5, 1.2);
        let p1 = plan_path(&[a.clone(), b.clone()], &set, &geom, &bare_params(), 3).unwrap();
        let p2 = plan_path(&[a, b], &set, &geom, &bare_params(), 3).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn middle_waypoints_are_preserved_in_order() {
        let set = wall_with_gap();
        let geom = bare_geometry();
        let wps = vec![
            bare_point(0.0, -1.5, 1.2),
            bare_point(0.5, 1.0, 1.2),
            bare_point(4.0, -1.5, 1.2),
        ];
        let path = plan_path(&wps, &set, &geom, &bare_params(), 5).unwrap();
        let mut cursor = 0;
        for w in &wps {
            let found = path.points[cursor..]
                .iter()
                .position(|p| p == w)
                .expect("waypoint missing from path");
            cursor += found;
        }
    }

    #[test]
    fn shortcut_collapses_zigzag_in_free_space() {
        let set = ObstacleSet {
            primitives: vec![],
            inflation: 0.0,
        };
        let geom = bare_geometry();
        let zigzag = Path {
            points: vec![
                bare_point(0.0, 0.0, 1.0),
                bare_point(0.5, 1.0, 1.0),
                bare_point(1.0, -1.0, 1.0),
                bare_point(1.5, 1.0, 1.0),
                bare_point(2.0, 0.0, 1.0),
            ],
        };
        let weights = default_weights(0);
        let cut = shortcut_path(&zigzag, &set, &geom, 9, 200);
        assert_eq!(cut.points.len(), 2);
        assert!(cut.metric_length(&weights) < zigzag.metric_length(&weights));
        assert_eq!(cut.points[0], zigzag.points[0]);
        assert_eq!(cut.points[1], zigzag.points[4]);
    }

    #[test]
    fn shortcut_never_lengthens() {
        let set = wall_with_gap();
        let geom = bare_geometry();
        let a = bare_point(0.0, -1.5, 1.2);
        let b = bare_point(4.0, -1.5, 1.2);
        let mut params = bare_params();
        params.shortcut_rounds = 0;
        let raw = plan_path(&[a, b], &set, &geom, &params, 11).unwrap();
        let weights = default_weights(0);
        let mut length = raw.metric_length(&weights);
        let mut path = raw;
        for round in 0..5 {
            path = shortcut_path(&path, &set, &geom, round, 40);
            let new_length = path.metric_length(&weights);
            assert!(new_length <= length + 1e-12);
            length = new_length;
            for w in path.points.windows(2) {
                assert!(collision_check_segment(&w[0], &w[1], &set, &geom, 0.005));
            }
        }
    }

    #[test]
    fn more_iterations_do_not_worsen_median_length() {
        let set = wall_with_gap();
        let geom = bare_geometry();
        let a = bare_point(0.0, -1.5, 1.2);
        let b = bare_point(4.0, -1.5, 1.2);
        let weights = default_weights(0);
        let mut params = bare_params();
        params.shortcut_rounds = 0;

        let median_for = |iterations: usize, params: &RRTStarParams| {
            let mut params = params.clone();
            params.max_iterations = iterations;
            let mut lengths: Vec<f64> = (0..20)
                .map(|seed| {
                    plan_path(&[a.clone(), b.clone()], &set, &geom, &params, seed)
                        .map(|p| p.metric_length(&weights))
                        .unwrap_or(f64::INFINITY)
                })
                .collect();
            lengths.sort_by(|x, y| x.partial_cmp(y).unwrap());
            (lengths[9] + lengths[10]) / 2.0
        };

        let coarse = median_for(1000, &params);
        let fine = median_for(10_000, &params);
        assert!(
            fine <= coarse,
            "median with 10000 iters {fine} vs 1000 iters {coarse}"
        );
    }

    #[test]
    fn yaw_wraps_along_interpolation() {
        let mut a = bare_point(0.0, 0.0, 1.0);
        let mut b = bare_point(1.0, 0.0, 1.0);
        a.psi = 3.0;
        b.psi = -3.0;
        let mid = ControlSpacePoint::interpolate(&a, &b, 0.5);
        // shortest arc crosses pi, not zero
        assert!(mid.psi.abs() > 3.0);
        let w = default_weights(0);
        assert!(metric(&a, &b, &w) < 0.5 * (2.0 * 3.0));
    }
}
