//! Convex obstacle primitives and point/segment distance queries.

use nalgebra::{Vector2, Vector3};

/// Convex solid obstacle. Distances are to the solid: zero inside.
#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    /// Axis-aligned box between two corners.
    Box {
        min: Vector3<f64>,
        max: Vector3<f64>,
    },
    /// Cylinder with axis parallel to z.
    Cylinder {
        center: Vector2<f64>,
        z_min: f64,
        z_max: f64,
        radius: f64,
    },
}

impl Primitive {
    /// Euclidean distance from a point to this solid; zero if inside.
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        match self {
            Primitive::Box { min, max } => {
                let dx = (min.x - p.x).max(0.0).max(p.x - max.x);
                let dy = (min.y - p.y).max(0.0).max(p.y - max.y);
                let dz = (min.z - p.z).max(0.0).max(p.z - max.z);
                (dx * dx + dy * dy + dz * dz).sqrt()
            }
            Primitive::Cylinder {
                center,
                z_min,
                z_max,
                radius,
            } => {
                let lateral = ((Vector2::new(p.x, p.y) - center).norm() - radius).max(0.0);
                let axial = (z_min - p.z).max(0.0).max(p.z - z_max);
                (lateral * lateral + axial * axial).sqrt()
            }
        }
    }

    /// Minimum distance from the segment [a, b] to this solid.
    ///
    /// Point-to-convex-solid distance is convex along a line, so ternary
    /// search converges; ties shrink both ends to stay correct on the flat
    /// (interior) section of the profile.
    pub fn segment_distance(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
        let d = b - a;
        if d.norm() < 1e-12 {
            return self.distance(a);
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..80 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            let f1 = self.distance(&(a + d * m1));
            let f2 = self.distance(&(a + d * m2));
            if f1 < f2 {
                hi = m2;
            } else if f2 < f1 {
                lo = m1;
            } else {
                lo = m1;
                hi = m2;
            }
        }
        self.distance(&(a + d * (0.5 * (lo + hi))))
            .min(self.distance(a))
            .min(self.distance(b))
    }
}

/// Collection of primitives grown by a shared safety margin.
#[derive(Clone, Debug, PartialEq)]
pub struct ObstacleSet {
    pub primitives: Vec<Primitive>,
    /// Inflation added to every primitive, in meters.
    pub inflation: f64,
}

impl ObstacleSet {
    /// Signed clearance of a point: distance to the nearest inflated
    /// primitive. Negative means inside the inflated region; infinite when
    /// the set is empty.
    pub fn clearance(&self, p: &Vector3<f64>) -> f64 {
        self.primitives
            .iter()
            .map(|prim| prim.distance(p))
            .fold(f64::INFINITY, f64::min)
            - self.inflation
    }
}

/// Signed clearance of a segment against every inflated primitive.
pub fn segment_clearance(set: &ObstacleSet, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    set.primitives
        .iter()
        .map(|prim| prim.segment_distance(a, b))
        .fold(f64::INFINITY, f64::min)
        - set.inflation
}
