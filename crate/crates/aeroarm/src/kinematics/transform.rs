use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};

/// Compositions between nearest-orthonormal projections of the rotation part.
///
/// Each composition multiplies two rotation matrices and loses a few ulps of
/// orthonormality; projecting every 64 compositions keeps the accumulated
/// drift far below 1e-12 without paying the SVD on every product.
const REORTHONORMALIZE_EVERY: u32 = 64;

/// A rigid-body pose: orthonormal rotation plus translation.
///
/// Values compose like homogeneous 4x4 matrices (`a.compose(&b)` applies `b`
/// first in `a`'s frame). A composition counter triggers periodic
/// re-orthonormalization so arbitrarily long chains stay valid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomogeneousTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    compositions: u32,
}

impl HomogeneousTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            compositions: 0,
        }
    }

    /// `rotation` must already be orthonormal; it is taken as-is.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
            compositions: 0,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(Matrix3::identity(), translation)
    }

    pub fn from_rotation_x(angle: f64) -> Self {
        Self::new(*Rotation3::from_axis_angle(&Vector3::x_axis(), angle).matrix(), Vector3::zeros())
    }

    pub fn from_rotation_y(angle: f64) -> Self {
        Self::new(*Rotation3::from_axis_angle(&Vector3::y_axis(), angle).matrix(), Vector3::zeros())
    }

    pub fn from_rotation_z(angle: f64) -> Self {
        Self::new(*Rotation3::from_axis_angle(&Vector3::z_axis(), angle).matrix(), Vector3::zeros())
    }

    /// Pose from intrinsic Z-Y-X Euler angles (yaw about z, then pitch about
    /// the new y, then roll about the new x) and a translation.
    pub fn from_euler_zyx(roll: f64, pitch: f64, yaw: f64, translation: Vector3<f64>) -> Self {
        Self::new(*Rotation3::from_euler_angles(roll, pitch, yaw).matrix(), translation)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// `self * other`: apply `other` in `self`'s frame.
    pub fn compose(&self, other: &Self) -> Self {
        let mut rotation = self.rotation * other.rotation;
        let translation = self.rotation * other.translation + self.translation;
        let mut compositions = self
            .compositions
            .saturating_add(other.compositions)
            .saturating_add(1);
        if compositions >= REORTHONORMALIZE_EVERY {
            rotation = nearest_orthonormal(&rotation);
            compositions = 0;
        }
        Self {
            rotation,
            translation,
            compositions,
        }
    }

    pub fn inverse(&self) -> Self {
        let rotation = self.rotation.transpose();
        Self {
            rotation,
            translation: -(rotation * self.translation),
            compositions: self.compositions,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Max deviation of R'R from the identity, for validity checks.
    pub fn orthonormality_defect(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity())
            .abs()
            .max()
    }
}

impl std::ops::Mul for &HomogeneousTransform {
    type Output = HomogeneousTransform;

    fn mul(self, rhs: &HomogeneousTransform) -> HomogeneousTransform {
        self.compose(rhs)
    }
}

impl std::ops::Mul for HomogeneousTransform {
    type Output = HomogeneousTransform;

    fn mul(self, rhs: HomogeneousTransform) -> HomogeneousTransform {
        self.compose(&rhs)
    }
}

/// Nearest orthonormal matrix (Frobenius sense) with det +1, via SVD.
pub fn nearest_orthonormal(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd of 3x3 always yields u");
    let v_t = svd.v_t.expect("svd of 3x3 always yields v_t");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        // flip the weakest singular direction to land on SO(3)
        let mut u = u;
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    r
}

/// (translation error in meters, rotation error in radians) between poses.
///
/// Rotation error is the angle of the relative rotation, computed through a
/// quaternion so it stays accurate near both 0 and pi.
pub fn pose_error(a: &HomogeneousTransform, b: &HomogeneousTransform) -> (f64, f64) {
    let translation = (a.translation - b.translation).norm();
    let rel = a.rotation.transpose() * b.rotation;
    (translation, rotation_angle(&rel))
}

/// Angle of a rotation matrix in [0, pi].
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r));
    2.0 * q.vector().norm().atan2(q.scalar().abs())
}

/// Axis-angle vector of a rotation matrix (angle in [0, pi] times unit axis).
pub fn rotation_log(r: &Matrix3<f64>) -> Vector3<f64> {
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r));
    let sign = if q.scalar() < 0.0 { -1.0 } else { 1.0 };
    let v = q.vector() * sign;
    let vn = v.norm();
    if vn < 1e-12 {
        // sin(angle/2) ~ angle/2 for tiny rotations
        v * 2.0
    } else {
        v * (2.0 * vn.atan2(q.scalar().abs()) / vn)
    }
}
