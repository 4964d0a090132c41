//! Elliptic Fourier descriptors of a closed polygon (Kuhl & Giardina, 1982).
//!
//! The coefficients use the closed-form per-segment sums for a
//! piecewise-linear curve. Each polygon edge advances the curve parameter by
//! one unit, so the period equals the vertex count. Registered contours are
//! equilateral, which makes this the arc-length parameterization for them.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfdCoefficients {
    pub order: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub a0: f64,
    pub c0: f64,
}

impl EfdCoefficients {
    /// `{a_i, b_i, c_i, d_i}` for `i = 1..=order`, named `fourier_a1 ...`.
    pub fn features(&self) -> FeatureVector {
        let mut names = Vec::with_capacity(4 * self.order);
        let mut values = Vec::with_capacity(4 * self.order);
        for i in 0..self.order {
            for (tag, v) in [("a", self.a[i]), ("b", self.b[i]), ("c", self.c[i]), ("d", self.d[i])] {
                names.push(format!("fourier_{tag}{}", i + 1));
                values.push(v);
            }
        }
        FeatureVector::new(names, values)
    }

    /// Evaluates the truncated series at parameter fraction `u ∈ [0, 1)`.
    pub fn eval(&self, u: f64) -> Point {
        let (mut x, mut y) = (self.a0, self.c0);
        for k in 0..self.order {
            let (s, c) = (TAU * (k + 1) as f64 * u).sin_cos();
            x += self.a[k] * c + self.b[k] * s;
            y += self.c[k] * c + self.d[k] * s;
        }
        [x, y]
    }
}

pub fn efd(pts: &[Point], order: usize) -> Result<EfdCoefficients> {
    if order == 0 {
        return Err(Error::InvalidParams("EFD order must be at least 1".into()));
    }
    let n = pts.len();
    if n < 3 {
        return Err(Error::DegenerateContour("EFD needs at least 3 points".into()));
    }
    let period = n as f64;
    let mut coeffs = EfdCoefficients {
        order,
        a: vec![0.0; order],
        b: vec![0.0; order],
        c: vec![0.0; order],
        d: vec![0.0; order],
        a0: 0.0,
        c0: 0.0,
    };
    // mean of the piecewise-linear curve over one period
    let (mut sx, mut sy) = (0.0, 0.0);
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        sx += 0.5 * (p[0] + q[0]);
        sy += 0.5 * (p[1] + q[1]);
    }
    coeffs.a0 = sx / period;
    coeffs.c0 = sy / period;

    for k in 0..order {
        let kf = (k + 1) as f64;
        let scale = period / (2.0 * kf * kf * PI * PI);
        let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
        let (mut s_prev, mut c_prev) = (0.0f64, 1.0f64);
        for i in 0..n {
            let p = pts[i];
            let q = pts[(i + 1) % n];
            let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
            let phi = TAU * kf * (i + 1) as f64 / period;
            let (s_cur, c_cur) = phi.sin_cos();
            a += dx * (c_cur - c_prev);
            b += dx * (s_cur - s_prev);
            c += dy * (c_cur - c_prev);
            d += dy * (s_cur - s_prev);
            s_prev = s_cur;
            c_prev = c_cur;
        }
        coeffs.a[k] = scale * a;
        coeffs.b[k] = scale * b;
        coeffs.c[k] = scale * c;
        coeffs.d[k] = scale * d;
    }
    if coeffs
        .a
        .iter()
        .chain(&coeffs.b)
        .chain(&coeffs.c)
        .chain(&coeffs.d)
        .any(|v| !v.is_finite())
    {
        return Err(Error::DegenerateContour("non-finite EFD coefficient".into()));
    }
    Ok(coeffs)
}

pub fn efd_features(pts: &[Point], order: usize) -> Result<FeatureVector> {
    Ok(efd(pts, order)?.features())
}

/// Samples the truncated series at `n_points` uniform parameter values,
/// starting at parameter 0.
pub fn reconstruct(e: &EfdCoefficients, n_points: usize) -> Vec<Point> {
    (0..n_points).map(|i| e.eval(i as f64 / n_points as f64)).collect()
}

/// Point on the polygon at parameter fraction `u ∈ [0, 1)`, with one
/// parameter unit per edge (matching [`efd`]).
pub fn polygon_at(pts: &[Point], u: f64) -> Point {
    let n = pts.len();
    let t = u.rem_euclid(1.0) * n as f64;
    let i = (t.floor() as usize).min(n - 1);
    let f = t - i as f64;
    let p = pts[i];
    let q = pts[(i + 1) % n];
    [p[0] + f * (q[0] - p[0]), p[1] + f * (q[1] - p[1])]
}

/// RMS distance between the polygon and its order-M reconstruction, both
/// sampled at `samples` uniform parameter values.
pub fn reconstruction_rmse(pts: &[Point], e: &EfdCoefficients, samples: usize) -> f64 {
    let recon = reconstruct(e, samples);
    let sq: f64 = recon
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let p = polygon_at(pts, i as f64 / samples as f64);
            (p[0] - r[0]).powi(2) + (p[1] - r[1]).powi(2)
        })
        .sum();
    (sq / samples as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ellipse(a: f64, b: f64, n: usize) -> Vec<Point> {
        (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                [a * t.cos() + 0.3, b * t.sin() - 0.2]
            })
            .collect()
    }

    fn singular_values(m: [[f64; 2]; 2]) -> (f64, f64) {
        let [[p, q], [r, s]] = m;
        let t = p * p + q * q + r * r + s * s;
        let det = (p * s - q * r).abs();
        let disc = (t * t - 4.0 * det * det).max(0.0).sqrt();
        (((t + disc) / 2.0).sqrt(), ((t - disc) / 2.0).sqrt())
    }

    #[test]
    fn ellipse_is_one_harmonic() {
        let e = efd(&ellipse(2.0, 1.0, 1000), 10).unwrap();
        let (s1, s2) = singular_values([[e.a[0], e.b[0]], [e.c[0], e.d[0]]]);
        assert!((s1 - 2.0).abs() < 1e-4, "{s1}");
        assert!((s2 - 1.0).abs() < 1e-4, "{s2}");
        for k in 1..10 {
            for v in [e.a[k], e.b[k], e.c[k], e.d[k]] {
                assert!(v.abs() < 1e-3 * 2.0);
            }
        }
        assert!((e.a0 - 0.3).abs() < 1e-9 && (e.c0 + 0.2).abs() < 1e-9);
    }

    #[test]
    fn feature_layout() {
        let f = efd_features(&ellipse(1.0, 1.0, 50), 10).unwrap();
        assert_eq!(f.len(), 40);
        assert_eq!(
            &f.names[..5],
            ["fourier_a1", "fourier_b1", "fourier_c1", "fourier_d1", "fourier_a2"]
        );
        assert_eq!(f.names[39], "fourier_d10");
    }

    #[test]
    fn harmonics_do_not_depend_on_order() {
        let pts: Vec<Point> = (0..100)
            .map(|i| {
                let t = TAU * i as f64 / 100.0;
                let r = 1.0 + 0.2 * (3.0 * t).cos() + 0.05 * (11.0 * t).sin();
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        let f10 = efd_features(&pts, 10).unwrap();
        let f20 = efd_features(&pts, 20).unwrap();
        for i in 0..40 {
            assert!((f10.values[i] - f20.values[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn square_reconstruction_improves_with_order() {
        let mut sq = Vec::new();
        for i in 0..25 {
            let t = i as f64 / 25.0;
            sq.push([t, 0.0]);
        }
        for i in 0..25 {
            let t = i as f64 / 25.0;
            sq.push([1.0, t]);
        }
        for i in 0..25 {
            let t = i as f64 / 25.0;
            sq.push([1.0 - t, 1.0]);
        }
        for i in 0..25 {
            let t = i as f64 / 25.0;
            sq.push([0.0, 1.0 - t]);
        }
        let e20 = efd(&sq, 20).unwrap();
        let e2 = efd(&sq, 2).unwrap();
        let r20 = reconstruction_rmse(&sq, &e20, 4000);
        let r2 = reconstruction_rmse(&sq, &e2, 4000);
        assert!(r20 < 0.01, "{r20}");
        assert!(r2 > 3.0 * r20, "{r2} vs {r20}");
    }

    #[test]
    fn zero_order_rejected() {
        assert!(efd(&ellipse(1.0, 1.0, 10), 0).is_err());
    }
}
