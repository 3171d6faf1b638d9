use nalgebra::{Matrix6, Matrix6xX, Vector6};

use super::transform::rotation_log;
use super::{joint_frames, DHTable, HomogeneousTransform, JointKind, KinematicsError, ManipulatorState};

/// Damped-least-squares solver configuration.
///
/// The pose error fed to the solver is the 6-vector
/// `[translation_weight * e_p; rotation_weight * e_r]`; convergence is
/// declared when its norm drops below `tolerance`. `accept_tol` is not used
/// by the solver itself: callers compare the returned combined residual
/// against it to decide whether a solution counts as reached or as the
/// best-effort approximation.
#[derive(Clone, Debug, PartialEq)]
pub struct IKOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub damping: f64,
    pub translation_weight: f64,
    pub rotation_weight: f64,
    /// Per-iteration clamp on the max-norm of the joint step, in joint units.
    pub max_step: f64,
    /// Acceptance gate on `residual` (meters + radians) for callers.
    pub accept_tol: f64,
    /// When set, iterates are clamped into `[lo, hi]` per joint.
    pub joint_limits: Option<Vec<(f64, f64)>>,
}

impl Default for IKOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 200,
            damping: 1e-3,
            translation_weight: 1.0,
            rotation_weight: 0.5,
            max_step: 0.5,
            accept_tol: 0.02,
            joint_limits: None,
        }
    }
}

/// Best-effort solution: non-convergence is not an error, the caller reads
/// the residual to decide what to do with an approximate solution.
#[derive(Clone, Debug)]
pub struct IKResult {
    pub q: ManipulatorState,
    /// translation_err + rotation_err (meters + radians).
    pub residual: f64,
    pub translation_err: f64,
    pub rotation_err: f64,
    pub iterations: usize,
}

fn clamp_to_limits(q: &mut ManipulatorState, limits: &Option<Vec<(f64, f64)>>) {
    if let Some(limits) = limits {
        for (value, (lo, hi)) in q.iter_mut().zip(limits) {
            *value = value.clamp(*lo, *hi);
        }
    }
}

/// Damped-least-squares inverse kinematics from `seed_q`.
///
/// Seeding with the previous sample's solution keeps consecutive solutions on
/// the same branch (the closest-configuration rule). The returned state is
/// the iterate with the lowest weighted error, so a late divergent step can
/// never worsen the result.
pub fn inverse_kinematics(
    table: &DHTable,
    target: &HomogeneousTransform,
    seed_q: &ManipulatorState,
    opts: &IKOptions,
) -> Result<IKResult, KinematicsError> {
    let m = table.actuated_count();
    if seed_q.len() != m {
        return Err(KinematicsError::DimensionMismatch {
            expected: m,
            got: seed_q.len(),
        });
    }
    if let Some(limits) = &opts.joint_limits {
        assert_eq!(limits.len(), m, "joint_limits length must match joint count");
    }

    let mut q = seed_q.clone();
    clamp_to_limits(&mut q, &opts.joint_limits);

    let mut best_q = q.clone();
    let mut best_weighted = f64::INFINITY;
    let mut best_errs = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;

    loop {
        let frames = joint_frames(table, &q)?;
        let ee = frames.last().expect("frames never empty");

        let e_p = target.translation() - ee.translation();
        let e_r = rotation_log(&(target.rotation() * ee.rotation().transpose()));
        let mut err = Vector6::zeros();
        err.fixed_rows_mut::<3>(0)
            .copy_from(&(e_p * opts.translation_weight));
        err.fixed_rows_mut::<3>(3)
            .copy_from(&(e_r * opts.rotation_weight));
        let weighted = err.norm();

        if weighted < best_weighted {
            best_weighted = weighted;
            best_errs = (e_p.norm(), e_r.norm());
            best_q.copy_from(&q);
        }
        if weighted < opts.tolerance || iterations >= opts.max_iterations {
            break;
        }

        let mut jw = Matrix6xX::zeros(m);
        let mut col = 0;
        for (j, row) in table.rows().iter().enumerate() {
            if row.joint_kind == JointKind::Fixed {
                continue;
            }
            let frame = &frames[j];
            let z = frame.rotation().column(2).into_owned();
            let (jp, jr) = match row.joint_kind {
                JointKind::Rotational => {
                    (z.cross(&(ee.translation() - frame.translation())), z)
                }
                JointKind::Prismatic => (z, nalgebra::Vector3::zeros()),
                JointKind::Fixed => unreachable!(),
            };
            jw.view_mut((0, col), (3, 1))
                .copy_from(&(jp * opts.translation_weight));
            jw.view_mut((3, col), (3, 1))
                .copy_from(&(jr * opts.rotation_weight));
            col += 1;
        }

        // (J J' + damping^2 I) y = e, step = J' y: Levenberg-style damping
        // keeps the solve well-posed at singular configurations.
        let jjt = &jw * jw.transpose() + Matrix6::identity() * opts.damping * opts.damping;
        let y = jjt
            .cholesky()
            .expect("damped normal matrix is positive definite")
            .solve(&err);
        let mut dq = jw.transpose() * y;
        let step = dq.amax();
        if step > opts.max_step {
            dq *= opts.max_step / step;
        }

        q += &dq;
        clamp_to_limits(&mut q, &opts.joint_limits);
        iterations += 1;

        if dq.norm() < 1e-14 {
            break;
        }
    }

    Ok(IKResult {
        q: best_q,
        residual: best_errs.0 + best_errs.1,
        translation_err: best_errs.0,
        rotation_err: best_errs.1,
        iterations,
    })
}
