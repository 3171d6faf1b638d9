//! Physical parameters of the multirotor and its rotor mixing.

use nalgebra::{DMatrix, DVector, Vector3};

/// Rigid-body and rotor-layout parameters of the vehicle.
#[derive(Clone, Debug, PartialEq)]
pub struct MultirotorParams {
    pub mass: f64,
    /// Principal moments of inertia (body frame), kg·m².
    pub inertia_diag: Vector3<f64>,
    /// Number of rotors.
    pub rotor_count: usize,
    /// 4 x rotor_count map from rotor thrusts to (total thrust, roll moment,
    /// pitch moment, yaw moment).
    pub mixing_matrix: DMatrix<f64>,
    /// Per-rotor thrust range [0, f_max], newtons.
    pub f_max: f64,
    pub gravity: f64,
    /// Position-norm bound beyond which the simulation reports divergence.
    pub workspace_radius: f64,
}

impl MultirotorParams {
    /// Flat symmetric multirotor with evenly spaced booms of length
    /// `boom_length`, alternating spin directions, and thrust-to-drag-moment
    /// ratio `c_m`. Rotor i sits at azimuth pi/n + 2pi·i/n.
    pub fn symmetric(
        rotor_count: usize,
        mass: f64,
        inertia_diag: Vector3<f64>,
        boom_length: f64,
        c_m: f64,
        f_max: f64,
    ) -> Self {
        assert!(rotor_count >= 4);
        let mut k = DMatrix::zeros(4, rotor_count);
        for i in 0..rotor_count {
            let chi = std::f64::consts::PI / rotor_count as f64
                + 2.0 * std::f64::consts::PI * i as f64 / rotor_count as f64;
            let spin = if i % 2 == 0 { 1.0 } else { -1.0 };
            k[(0, i)] = 1.0;
            k[(1, i)] = boom_length * chi.sin();
            k[(2, i)] = -boom_length * chi.cos();
            k[(3, i)] = c_m * spin;
        }
        Self {
            mass,
            inertia_diag,
            rotor_count,
            mixing_matrix: k,
            f_max,
            gravity: 9.81,
            workspace_radius: 50.0,
        }
    }

    /// Right pseudo-inverse of the mixing matrix: minimum-norm rotor thrusts
    /// realizing a commanded (u1..u4).
    pub fn mixing_pinv(&self) -> DMatrix<f64> {
        self.mixing_matrix
            .clone()
            .pseudo_inverse(1e-12)
            .expect("mixing matrix has full row rank")
    }

    /// Rotor thrusts for a commanded wrench, kept inside [0, f_max] with
    /// thrust priority: when the torque demand would drive a rotor out of its
    /// range, the torque share is scaled down just enough to fit while the
    /// collective share is preserved. A torque shortfall only slows the
    /// attitude response; a collective error pushes the vehicle off altitude.
    pub fn allocate(&self, pinv: &DMatrix<f64>, u: &nalgebra::Vector4<f64>) -> DVector<f64> {
        let mut thrust = pinv * DVector::from_column_slice(&[u[0], 0.0, 0.0, 0.0]);
        for v in thrust.iter_mut() {
            *v = v.clamp(0.0, self.f_max);
        }
        let torque = pinv * DVector::from_column_slice(&[0.0, u[1], u[2], u[3]]);
        let mut scale = 1.0_f64;
        for i in 0..self.rotor_count {
            let room = if torque[i] > 0.0 {
                (self.f_max - thrust[i]) / torque[i]
            } else if torque[i] < 0.0 {
                thrust[i] / -torque[i]
            } else {
                continue;
            };
            scale = scale.min(room);
        }
        let mut f = thrust + torque * scale;
        for v in f.iter_mut() {
            *v = v.clamp(0.0, self.f_max);
        }
        f
    }

    pub fn hover_thrust_total(&self) -> f64 {
        self.mass * self.gravity
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn hexarotor() -> MultirotorParams {
        MultirotorParams::symmetric(
            6,
            3.5,
            Vector3::new(0.21, 0.22, 0.36),
            0.30,
            0.016,
            16.0,
        )
    }

    #[test]
    fn mixing_matrix_has_full_row_rank() {
        let params = hexarotor();
        assert_eq!(params.mixing_matrix.rank(1e-9), 4);
    }

    #[test]
    fn hover_allocation_splits_weight_evenly() {
        let params = hexarotor();
        let pinv = params.mixing_pinv();
        let u = nalgebra::Vector4::new(params.hover_thrust_total(), 0.0, 0.0, 0.0);
        let f = params.allocate(&pinv, &u);
        for i in 0..6 {
            assert_abs_diff_eq!(f[i], params.hover_thrust_total() / 6.0, epsilon = 1e-9);
        }
        // and the wrench round-trips through the mixer
        let round = &params.mixing_matrix * &f;
        assert_abs_diff_eq!(round[0], params.hover_thrust_total(), epsilon = 1e-9);
        for i in 1..4 {
            assert_abs_diff_eq!(round[i], 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn saturating_torque_demand_preserves_collective_thrust() {
        let params = hexarotor();
        let pinv = params.mixing_pinv();
        // a pitch moment far beyond what the rotors can realize
        let u = nalgebra::Vector4::new(params.hover_thrust_total(), 0.0, 150.0, 0.0);
        let f = params.allocate(&pinv, &u);
        assert!(f.iter().all(|&v| (0.0..=params.f_max).contains(&v)));
        let round = &params.mixing_matrix * &f;
        assert_abs_diff_eq!(round[0], params.hover_thrust_total(), epsilon = 1e-9);
        // the realized moment keeps its sign even though it is scaled down
        assert!(round[2] > 0.0);
    }

    #[test]
    fn allocation_clamps_to_rotor_range() {
        let params = hexarotor();
        let pinv = params.mixing_pinv();
        let u = nalgebra::Vector4::new(1000.0, 0.0, 0.0, 0.0);
        let f = params.allocate(&pinv, &u);
        assert!(f.iter().all(|&v| (0.0..=params.f_max).contains(&v)));
        assert_abs_diff_eq!(f[0], params.f_max);
        let down = nalgebra::Vector4::new(-50.0, 0.0, 0.0, 0.0);
        let f = params.allocate(&pinv, &down);
        assert!(f.iter().all(|&v| v == 0.0));
    }
}
