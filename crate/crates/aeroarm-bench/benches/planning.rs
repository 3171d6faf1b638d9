//! Path planning cost: the direct-connect fast path and a sampling run
//! around a wall.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::{DVector, Vector3};

use aeroarm::presets::reference_geometry;
use aeroarm::{plan_path, ControlSpacePoint, ObstacleSet, Path, Primitive, RRTStarParams};

fn point(x: f64, y: f64, z: f64) -> ControlSpacePoint {
    ControlSpacePoint {
        p_b: Vector3::new(x, y, z),
        psi: 0.0,
        q_m: DVector::zeros(3),
    }
}

fn params() -> RRTStarParams {
    let low = DVector::from_column_slice(&[-1.0, -2.0, 0.2, -3.2, -3.1, -1.8, -3.1]);
    let high = DVector::from_column_slice(&[5.0, 3.0, 2.5, 3.2, 3.1, 1.8, 3.1]);
    RRTStarParams {
        max_iterations: 2500,
        steer_step: 0.4,
        goal_bias: 0.15,
        shortcut_rounds: 50,
        collision_resolution: 0.05,
        ..RRTStarParams::for_bounds(low, high)
    }
}

fn bench_direct_connect(c: &mut Criterion) {
    let waypoints = [point(0.0, 0.0, 1.0), point(4.0, 0.0, 1.0)];
    let obstacles = ObstacleSet {
        primitives: vec![],
        inflation: 0.0,
    };
    let geometry = reference_geometry();
    let params = params();
    c.bench_function("plan_direct_connect", |b| {
        b.iter(|| -> Path {
            plan_path(black_box(&waypoints), &obstacles, &geometry, &params, 1).unwrap()
        })
    });
}

fn bench_around_wall(c: &mut Criterion) {
    let waypoints = [point(0.0, 0.0, 1.0), point(4.0, 0.0, 1.0)];
    let obstacles = ObstacleSet {
        primitives: vec![Primitive::Box {
            min: Vector3::new(1.9, -0.8, 0.0),
            max: Vector3::new(2.1, 1.5, 2.2),
        }],
        inflation: 0.0,
    };
    let geometry = reference_geometry();
    let params = params();
    let mut group = c.benchmark_group("sampling");
    group.sample_size(10);
    group.bench_function("plan_around_wall", |b| {
        b.iter(|| -> Path {
            plan_path(black_box(&waypoints), &obstacles, &geometry, &params, 1).unwrap()
        })
    });
    group.finish();
}

criterion_group!(planning, bench_direct_connect, bench_around_wall);
criterion_main!(planning);
