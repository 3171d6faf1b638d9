//! Vector-valued natural cubic spline over chord-length knots.

use nalgebra::DVector;

/// Twice continuously differentiable interpolant through the given points.
///
/// Natural end conditions (zero second derivative) keep a two-point path
/// exactly affine, so straight planner segments stay straight.
#[derive(Clone, Debug)]
pub struct CubicSpline {
    knots: Vec<f64>,
    points: Vec<DVector<f64>>,
    /// Second derivative at each knot; zero at both ends.
    moments: Vec<DVector<f64>>,
}

impl CubicSpline {
    /// Interpolates `points` at the given strictly increasing `knots`.
    pub fn new(knots: Vec<f64>, points: Vec<DVector<f64>>) -> Self {
        assert_eq!(knots.len(), points.len());
        assert!(knots.len() >= 2);
        assert!(knots.windows(2).all(|w| w[1] > w[0]));
        let n = knots.len();
        let dim = points[0].len();
        let mut moments = vec![DVector::zeros(dim); n];
        if n > 2 {
            // tridiagonal system for interior second derivatives
            let m = n - 2;
            let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs: Vec<DVector<f64>> = Vec::with_capacity(m);
            for i in 0..m {
                diag[i] = 2.0 * (h[i] + h[i + 1]);
                upper[i] = h[i + 1];
                let slope_next = (&points[i + 2] - &points[i + 1]) / h[i + 1];
                let slope_prev = (&points[i + 1] - &points[i]) / h[i];
                rhs.push((slope_next - slope_prev) * 6.0);
            }
            // Thomas algorithm; the lower diagonal entry for row i is h[i]
            for i in 1..m {
                let w = h[i] / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                let carried = rhs[i - 1].clone() * w;
                rhs[i] -= carried;
            }
            moments[m] = &rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                moments[i + 1] = (&rhs[i] - &moments[i + 2] * upper[i]) / diag[i];
            }
        }
        Self {
            knots,
            points,
            moments,
        }
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn s_end(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Index of the segment containing `s` (clamped to the domain).
    fn locate(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(self.knots[0], self.s_end());
        let i = match self
            .knots
            .binary_search_by(|k| k.partial_cmp(&s).unwrap())
        {
            Ok(i) => i.min(self.knots.len() - 2),
            Err(i) => i - 1,
        };
        (i, s - self.knots[i])
    }

    pub fn position(&self, s: f64) -> DVector<f64> {
        let (i, t) = self.locate(s);
        let h = self.knots[i + 1] - self.knots[i];
        let b = self.segment_slope(i, h);
        &self.points[i]
            + b * t
            + &self.moments[i] * (t * t / 2.0)
            + (&self.moments[i + 1] - &self.moments[i]) * (t * t * t / (6.0 * h))
    }

    pub fn derivative(&self, s: f64) -> DVector<f64> {
        let (i, t) = self.locate(s);
        let h = self.knots[i + 1] - self.knots[i];
        self.segment_slope(i, h)
            + &self.moments[i] * t
            + (&self.moments[i + 1] - &self.moments[i]) * (t * t / (2.0 * h))
    }

    pub fn second_derivative(&self, s: f64) -> DVector<f64> {
        let (i, t) = self.locate(s);
        let h = self.knots[i + 1] - self.knots[i];
        &self.moments[i] + (&self.moments[i + 1] - &self.moments[i]) * (t / h)
    }

    /// First derivative at the left knot of segment `i`.
    fn segment_slope(&self, i: usize, h: f64) -> DVector<f64> {
        (&self.points[i + 1] - &self.points[i]) / h
            - (&self.moments[i] * 2.0 + &self.moments[i + 1]) * (h / 6.0)
    }
}
