//! Time-optimal path parametrization by reachability analysis.
//!
//! The planner's piecewise-straight path is interpolated by a cubic spline
//! over a chord-length parameter s; this module computes the largest speed
//! profile x(s) = (ds/dt)² that respects per-coordinate velocity and
//! acceleration limits, then samples the resulting trajectory at a fixed
//! control period.
//!
//! With x = ṡ² and u = s̈, every limit becomes affine in (x, u):
//! velocity |P'_i| ṡ ≤ v_i caps x, and acceleration |P'_i u + P''_i x| ≤ a_i
//! bounds u between affine functions of x. One backward sweep propagates
//! controllable speed intervals; one greedy forward sweep rides their
//! ceiling, which is the time-optimal profile for this constraint family.

mod spline;

use nalgebra::DVector;
use thiserror::Error;

use crate::planner::Path;
use spline::CubicSpline;

/// Grid points used between path endpoints when none are specified.
pub const DEFAULT_GRID: usize = 1000;

/// Division by a path derivative smaller than this treats the coordinate as
/// direction-free at that point.
const DERIVATIVE_FLOOR: f64 = 1e-12;

/// Speed-squared floor that keeps the forward pass off exact zero at
/// interior grid points, where the time integral would diverge.
const MIN_INTERIOR_X: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToppError {
    #[error("path degenerates to fewer than 2 distinct points")]
    DegeneratePath,
    #[error("point {index} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("limits must be strictly positive and match the path dimension")]
    InvalidLimits,
    #[error("no feasible speed interval at grid index {index}")]
    InfeasibleParametrization { index: usize },
    #[error("start speed {x_start} outside the controllable interval [{low}, {high}]")]
    UncontrollableStart { x_start: f64, low: f64, high: f64 },
}

/// Twice-differentiable interpolation of a control-space path over a
/// chord-length parameter.
#[derive(Clone, Debug)]
pub struct GeometricPath {
    spline: CubicSpline,
}

impl GeometricPath {
    pub fn dim(&self) -> usize {
        self.spline.dim()
    }

    pub fn s_end(&self) -> f64 {
        self.spline.s_end()
    }

    pub fn position(&self, s: f64) -> DVector<f64> {
        self.spline.position(s)
    }

    pub fn derivative(&self, s: f64) -> DVector<f64> {
        self.spline.derivative(s)
    }

    pub fn second_derivative(&self, s: f64) -> DVector<f64> {
        self.spline.second_derivative(s)
    }

    /// Uniform parameter grid with `n` intervals covering [0, s_end].
    pub fn uniform_grid(&self, n: usize) -> Vec<f64> {
        assert!(n >= 1);
        let s_end = self.s_end();
        (0..=n).map(|k| s_end * k as f64 / n as f64).collect()
    }
}

/// Per-coordinate speed and acceleration limits, matching the control-space
/// layout (x, y, z, yaw, then arm joints).
#[derive(Clone, Debug, PartialEq)]
pub struct KinodynamicLimits {
    pub v_max: DVector<f64>,
    pub a_max: DVector<f64>,
}

impl KinodynamicLimits {
    fn check(&self, dim: usize) -> Result<(), ToppError> {
        let ok = self.v_max.len() == dim
            && self.a_max.len() == dim
            && self.v_max.iter().all(|&v| v > 0.0)
            && self.a_max.iter().all(|&a| a > 0.0);
        if ok {
            Ok(())
        } else {
            Err(ToppError::InvalidLimits)
        }
    }
}

/// Fits the interpolating spline for a planner path.
///
/// Consecutive duplicate points are merged; a path that collapses to a
/// single distinct point is rejected.
pub fn fit_geometric_path(path: &Path) -> Result<GeometricPath, ToppError> {
    let vectors: Vec<DVector<f64>> = path.points.iter().map(|p| p.to_vector()).collect();
    fit_from_points(&vectors)
}

/// Spline fit over raw coordinate vectors; knots at cumulative chord length.
pub fn fit_from_points(points: &[DVector<f64>]) -> Result<GeometricPath, ToppError> {
    let Some(first) = points.first() else {
        return Err(ToppError::DegeneratePath);
    };
    let dim = first.len();
    let mut knots = vec![0.0];
    let mut kept: Vec<DVector<f64>> = vec![first.clone()];
    for (index, p) in points.iter().enumerate().skip(1) {
        if p.len() != dim {
            return Err(ToppError::DimensionMismatch {
                index,
                expected: dim,
                got: p.len(),
            });
        }
        let chord = (p - kept.last().unwrap()).norm();
        if chord < 1e-9 {
            continue;
        }
        knots.push(knots.last().unwrap() + chord);
        kept.push(p.clone());
    }
    if kept.len() < 2 {
        return Err(ToppError::DegeneratePath);
    }
    Ok(GeometricPath {
        spline: CubicSpline::new(knots, kept),
    })
}

/// Feasible-speed description at a fixed path parameter: a cap on x = ṡ²
/// plus affine one-sided bounds on u = s̈.
#[derive(Clone, Debug)]
pub struct SpeedBounds {
    /// Largest admissible x, combining velocity limits with acceleration
    /// limits at coordinates whose path derivative vanishes.
    pub x_max: f64,
    /// Entries (c0, c1) meaning u ≥ c0 + c1·x.
    pub lower: Vec<(f64, f64)>,
    /// Entries (c0, c1) meaning u ≤ c0 + c1·x.
    pub upper: Vec<(f64, f64)>,
}

impl SpeedBounds {
    /// Admissible acceleration interval at speed-squared `x`.
    pub fn u_range(&self, x: f64) -> (f64, f64) {
        let lo = self
            .lower
            .iter()
            .map(|&(c0, c1)| c0 + c1 * x)
            .fold(f64::NEG_INFINITY, f64::max);
        let hi = self
            .upper
            .iter()
            .map(|&(c0, c1)| c0 + c1 * x)
            .fold(f64::INFINITY, f64::min);
        (lo, hi)
    }
}

/// Evaluates the velocity/acceleration constraint system at parameter `s`.
pub fn second_order_bounds(
    path: &GeometricPath,
    limits: &KinodynamicLimits,
    s: f64,
) -> SpeedBounds {
    let dp = path.derivative(s);
    let ddp = path.second_derivative(s);
    let mut bounds = SpeedBounds {
        x_max: f64::INFINITY,
        lower: Vec::with_capacity(dp.len()),
        upper: Vec::with_capacity(dp.len()),
    };
    for i in 0..dp.len() {
        let (v, a) = (limits.v_max[i], limits.a_max[i]);
        if dp[i].abs() >= DERIVATIVE_FLOOR {
            bounds.x_max = bounds.x_max.min((v / dp[i].abs()).powi(2));
            // |dp·u + ddp·x| <= a, divided through by dp
            let hi = ((a - 0.0) / dp[i], -ddp[i] / dp[i]);
            let lo = (-a / dp[i], -ddp[i] / dp[i]);
            if dp[i] > 0.0 {
                bounds.upper.push(hi);
                bounds.lower.push(lo);
            } else {
                bounds.upper.push(lo);
                bounds.lower.push(hi);
            }
        } else if ddp[i].abs() >= DERIVATIVE_FLOOR {
            // direction-free coordinate: the acceleration limit caps x alone
            bounds.x_max = bounds.x_max.min(a / ddp[i].abs());
        }
    }
    bounds
}

/// Controllable speed-squared intervals over a parameter grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ControllableSets {
    pub s: Vec<f64>,
    /// One (low, high) interval per grid point.
    pub intervals: Vec<(f64, f64)>,
}

/// Backward sweep: at each grid point, the interval of speeds from which the
/// terminal speed `x_end` remains reachable under the affine bounds.
///
/// All reachability and consistency conditions are half-line constraints in
/// x, so every set is an exact interval; no solver is involved.
pub fn backward_pass(
    path: &GeometricPath,
    limits: &KinodynamicLimits,
    grid: &[f64],
    x_end: f64,
) -> Result<ControllableSets, ToppError> {
    limits.check(path.dim())?;
    assert!(!grid.is_empty() && x_end >= 0.0);
    let n = grid.len();
    let mut intervals = vec![(0.0, 0.0); n];
    intervals[n - 1] = (x_end, x_end);
    for k in (0..n.saturating_sub(1)).rev() {
        let bounds = second_order_bounds(path, limits, grid[k]);
        let delta = grid[k + 1] - grid[k];
        let (next_low, next_high) = intervals[k + 1];
        let mut lo = 0.0f64;
        let mut hi = bounds.x_max;

        let apply = |coef: f64, rhs: f64, lo: &mut f64, hi: &mut f64| {
            // constraint coef·x ≤ rhs
            if coef > 1e-15 {
                *hi = hi.min(rhs / coef);
            } else if coef < -1e-15 {
                *lo = lo.max(rhs / coef);
            } else if rhs < -1e-12 {
                *hi = f64::NEG_INFINITY;
            }
        };
        // reach up far enough: x + 2Δ·(c0 + c1·x) ≥ next_low for every upper
        // bound entry (their min is u_max)
        for &(c0, c1) in &bounds.upper {
            apply(
                -(1.0 + 2.0 * delta * c1),
                -(next_low - 2.0 * delta * c0),
                &mut lo,
                &mut hi,
            );
        }
        // brake down far enough: x + 2Δ·(c0 + c1·x) ≤ next_high for every
        // lower bound entry (their max is u_min)
        for &(c0, c1) in &bounds.lower {
            apply(
                1.0 + 2.0 * delta * c1,
                next_high - 2.0 * delta * c0,
                &mut lo,
                &mut hi,
            );
        }
        // the acceleration interval itself must be nonempty
        for &(l0, l1) in &bounds.lower {
            for &(h0, h1) in &bounds.upper {
                apply(l1 - h1, h0 - l0, &mut lo, &mut hi);
            }
        }
        if hi < lo {
            return Err(ToppError::InfeasibleParametrization { index: k });
        }
        intervals[k] = (lo, hi);
    }
    Ok(ControllableSets {
        s: grid.to_vec(),
        intervals,
    })
}

/// Time-optimal speed profile along the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedProfile {
    pub s: Vec<f64>,
    /// Speed squared x = ṡ² at each grid point.
    pub x: Vec<f64>,
    /// Constant path acceleration u = s̈ over each cell (len = points - 1).
    pub u: Vec<f64>,
    /// Time stamp of each grid point, starting at 0.
    pub t: Vec<f64>,
    /// Velocity limits the profile was built under; sampling clamps
    /// interpolated velocities to them.
    pub v_max: DVector<f64>,
}

impl SpeedProfile {
    pub fn duration(&self) -> f64 {
        *self.t.last().unwrap()
    }
}

/// Greedy forward sweep riding the controllable ceiling; time stamps use the
/// exact constant-acceleration cell integral 2Δ/(√x_k + √x_{k+1}).
pub fn forward_pass(
    path: &GeometricPath,
    limits: &KinodynamicLimits,
    sets: &ControllableSets,
    x_start: f64,
) -> Result<SpeedProfile, ToppError> {
    limits.check(path.dim())?;
    let n = sets.s.len();
    let (low0, high0) = sets.intervals[0];
    if x_start < low0 - 1e-9 || x_start > high0 + 1e-9 {
        return Err(ToppError::UncontrollableStart {
            x_start,
            low: low0,
            high: high0,
        });
    }
    let mut x = vec![x_start.clamp(low0, high0).max(0.0)];
    let mut u = Vec::with_capacity(n.saturating_sub(1));
    let mut t = vec![0.0];
    for k in 0..n - 1 {
        let delta = sets.s[k + 1] - sets.s[k];
        let bounds = second_order_bounds(path, limits, sets.s[k]);
        let (_, u_hi) = bounds.u_range(x[k]);
        let (next_low, next_high) = sets.intervals[k + 1];
        let mut next = x[k] + 2.0 * delta * u_hi;
        next = next.min(next_high).max(next_low).max(0.0);
        if k + 1 < n - 1 && next < MIN_INTERIOR_X {
            next = MIN_INTERIOR_X.min(next_high);
        }
        u.push((next - x[k]) / (2.0 * delta));
        let dt = 2.0 * delta / (x[k].sqrt() + next.sqrt());
        t.push(t[k] + dt);
        x.push(next);
    }
    Ok(SpeedProfile {
        s: sets.s.clone(),
        x,
        u,
        t,
        v_max: limits.v_max.clone(),
    })
}

/// One sample of the time parametrized trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlTrajectoryPoint {
    pub t: f64,
    pub q: DVector<f64>,
    pub dq: DVector<f64>,
    pub ddq: DVector<f64>,
}

/// Trajectory sampled at a uniform control period.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledTrajectory {
    pub points: Vec<ControlTrajectoryPoint>,
    pub t_s: f64,
}

impl SampledTrajectory {
    pub fn duration(&self) -> f64 {
        self.points.last().map(|p| p.t).unwrap_or(0.0)
    }
}

/// Samples positions, velocities and accelerations at k·T_s.
///
/// The grid extends one period past the profile end when the duration is
/// not a multiple of T_s, holding the final state, so spacing stays exactly
/// uniform. Interpolated velocities are clamped to the profile's limits;
/// grid-point feasibility guarantees any mid-cell overshoot is tiny.
pub fn sample_trajectory(
    path: &GeometricPath,
    profile: &SpeedProfile,
    t_s: f64,
) -> SampledTrajectory {
    assert!(t_s > 0.0);
    let t_end = profile.duration();
    let count = (t_end / t_s - 1e-9).ceil().max(0.0) as usize;
    let s_end = path.s_end();
    let mut points = Vec::with_capacity(count + 1);
    for k in 0..=count {
        let tk = k as f64 * t_s;
        let (s, sdot, u) = if tk >= t_end {
            (s_end, profile.x.last().unwrap().sqrt(), 0.0)
        } else {
            // last cell whose start time is <= tk
            let i = profile.t.partition_point(|&ti| ti <= tk).max(1) - 1;
            let dt = tk - profile.t[i];
            let sdot_i = profile.x[i].sqrt();
            let ui = profile.u[i];
            let s = (profile.s[i] + sdot_i * dt + 0.5 * ui * dt * dt)
                .clamp(profile.s[i], profile.s[i + 1]);
            ((s), (sdot_i + ui * dt).max(0.0), ui)
        };
        let q = path.position(s);
        let dp = path.derivative(s);
        let ddp = path.second_derivative(s);
        let mut dq = &dp * sdot;
        for i in 0..dq.len() {
            dq[i] = dq[i].clamp(-profile.v_max[i], profile.v_max[i]);
        }
        let ddq = dp * u + ddp * (sdot * sdot);
        points.push(ControlTrajectoryPoint { t: tk, q, dq, ddq });
    }
    SampledTrajectory { points, t_s }
}

/// Convenience composition: fit, backward, forward, sample, rest-to-rest.
pub fn parametrize(
    path: &Path,
    limits: &KinodynamicLimits,
    grid_points: usize,
    t_s: f64,
) -> Result<SampledTrajectory, ToppError> {
    let geometric = fit_geometric_path(path)?;
    let grid = geometric.uniform_grid(grid_points);
    let sets = backward_pass(&geometric, limits, &grid, 0.0)?;
    let profile = forward_pass(&geometric, limits, &sets, 0.0)?;
    Ok(sample_trajectory(&geometric, &profile, t_s))
}
