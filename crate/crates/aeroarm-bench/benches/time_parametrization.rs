//! Time parametrization cost for straight and multi-segment paths.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::{DVector, Vector3};

use aeroarm::{parametrize, ControlSpacePoint, KinodynamicLimits, Path};

fn limits() -> KinodynamicLimits {
    KinodynamicLimits {
        v_max: DVector::from_column_slice(&[1.5, 1.5, 1.0, 1.0, 3.0, 3.0, 3.0]),
        a_max: DVector::from_column_slice(&[2.0, 2.0, 1.5, 1.5, 40.0, 40.0, 40.0]),
    }
}

fn point(x: f64, y: f64, z: f64) -> ControlSpacePoint {
    ControlSpacePoint {
        p_b: Vector3::new(x, y, z),
        psi: 0.0,
        q_m: DVector::zeros(3),
    }
}

fn bench_straight(c: &mut Criterion) {
    let path = Path {
        points: vec![point(0.0, 0.0, 1.2), point(3.0, 0.0, 1.2)],
    };
    let limits = limits();
    c.bench_function("parametrize_straight_400", |b| {
        b.iter(|| parametrize(black_box(&path), &limits, 400, 0.01).unwrap())
    });
}

fn bench_bent(c: &mut Criterion) {
    let path = Path {
        points: vec![
            point(0.0, 0.0, 1.0),
            point(1.5, 0.8, 1.2),
            point(2.5, -0.4, 1.6),
            point(4.0, 0.0, 1.0),
        ],
    };
    let limits = limits();
    c.bench_function("parametrize_bent_400", |b| {
        b.iter(|| parametrize(black_box(&path), &limits, 400, 0.01).unwrap())
    });
}

criterion_group!(time_parametrization, bench_straight, bench_bent);
criterion_main!(time_parametrization);
