//! Curvature from periodic interpolating cubic splines in cumulative chord
//! length.
//!
//! Sign convention: κ = (y'x'' − x'y'') / (x'² + y'²)^{3/2}, which is positive
//! on convex stretches of a clockwise contour (the registered orientation).

use crate::error::{Error, Result};
use crate::geometry::dist;
use crate::Point;

/// Solves a cyclic tridiagonal system (`sub[0]` couples row 0 to the last
/// column, `sup[n-1]` couples the last row to column 0) by Sherman–Morrison
/// on top of the Thomas algorithm.
pub(crate) fn solve_cyclic_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let gamma = -diag[0];
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= sub[0] * sup[n - 1] / gamma;

    let thomas = |d: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        c[0] = sup[0] / b[0];
        x[0] = d[0] / b[0];
        for i in 1..n {
            let m = b[i] - sub[i] * c[i - 1];
            c[i] = if i < n - 1 { sup[i] / m } else { 0.0 };
            x[i] = (d[i] - sub[i] * x[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    };

    let y = thomas(rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = sup[n - 1];
    let z = thomas(&u);
    let vy = y[0] + sub[0] / gamma * y[n - 1];
    let vz = z[0] + sub[0] / gamma * z[n - 1];
    let f = vy / (1.0 + vz);
    y.iter().zip(&z).map(|(yi, zi)| yi - f * zi).collect()
}

/// Periodic cubic spline through `values` at knots separated by `h`
/// (`h[i]` spans knot i to i+1, wrapping). Returns (first, second)
/// derivatives at the knots.
fn periodic_spline_derivatives(values: &[f64], h: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = values.len();
    let prev = |i: usize| (i + n - 1) % n;
    let next = |i: usize| (i + 1) % n;
    let sub: Vec<f64> = (0..n).map(|i| h[prev(i)]).collect();
    let diag: Vec<f64> = (0..n).map(|i| 2.0 * (h[prev(i)] + h[i])).collect();
    let sup: Vec<f64> = h.to_vec();
    let rhs: Vec<f64> = (0..n)
        .map(|i| 6.0 * ((values[next(i)] - values[i]) / h[i] - (values[i] - values[prev(i)]) / h[prev(i)]))
        .collect();
    let m = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs);
    let d1 = (0..n)
        .map(|i| (values[next(i)] - values[i]) / h[i] - h[i] * (2.0 * m[i] + m[next(i)]) / 6.0)
        .collect();
    (d1, m)
}

/// Signed curvature at each vertex.
pub fn curvature(pts: &[Point]) -> Result<Vec<f64>> {
    let n = pts.len();
    if n < 3 {
        return Err(Error::DegenerateContour("curvature needs at least 3 points".into()));
    }
    let h: Vec<f64> = (0..n).map(|i| dist(pts[i], pts[(i + 1) % n])).collect();
    if h.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateContour("repeated consecutive points".into()));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p[1]).collect();
    let (dx, ddx) = periodic_spline_derivatives(&xs, &h);
    let (dy, ddy) = periodic_spline_derivatives(&ys, &h);
    let k: Vec<f64> = (0..n)
        .map(|i| (dy[i] * ddx[i] - dx[i] * ddy[i]) / (dx[i] * dx[i] + dy[i] * dy[i]).powf(1.5))
        .collect();
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateContour("non-finite curvature".into()));
    }
    Ok(k)
}

/// Arc-length weight of each vertex (half of each adjacent chord).
pub fn vertex_arc_weights(pts: &[Point]) -> Vec<f64> {
    let n = pts.len();
    (0..n)
        .map(|i| 0.5 * (dist(pts[(i + n - 1) % n], pts[i]) + dist(pts[i], pts[(i + 1) % n])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn cyclic_solver_matches_dense() {
        let n = 7;
        let sub: Vec<f64> = (0..n).map(|i| 0.5 + i as f64 * 0.1).collect();
        let sup: Vec<f64> = (0..n).map(|i| 0.3 + i as f64 * 0.05).collect();
        let diag: Vec<f64> = (0..n).map(|i| 3.0 + i as f64).collect();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs);
        for i in 0..n {
            let lhs = sub[i] * x[(i + n - 1) % n] + diag[i] * x[i] + sup[i] * x[(i + 1) % n];
            assert!((lhs - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn clockwise_circle_has_positive_constant_curvature() {
        let r = 1.0 / PI.sqrt();
        let pts: Vec<Point> = (0..100)
            .map(|i| {
                let t = -TAU * i as f64 / 100.0;
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        for k in curvature(&pts).unwrap() {
            assert!((k - PI.sqrt()).abs() < 0.01 * PI.sqrt());
        }
    }

    #[test]
    fn rounded_rectangle_edges_are_flat() {
        // clockwise rounded rectangle, corner radius 0.2, flat sides length 2
        let mut pts: Vec<Point> = Vec::new();
        let r = 0.2;
        let corners = [
            (1.0, -0.5, 0.0),
            (-1.0, -0.5, -PI / 2.0),
            (-1.0, 0.5, -PI),
            (1.0, 0.5, PI / 2.0),
        ];
        for (cx, cy, start) in corners {
            for j in 0..=10 {
                let t: f64 = start - (PI / 2.0) * j as f64 / 10.0;
                pts.push([cx + r * t.cos(), cy + r * t.sin()]);
            }
        }
        // add interior samples on the long edges
        let mut dense = Vec::new();
        for i in 0..pts.len() {
            let a = pts[i];
            let b = pts[(i + 1) % pts.len()];
            let steps = (dist(a, b) / 0.06).ceil() as usize;
            for s in 0..steps {
                let t = s as f64 / steps as f64;
                dense.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        let k = curvature(&dense).unwrap();
        let mid: Vec<f64> = dense
            .iter()
            .zip(&k)
            .filter(|(p, _)| p[0].abs() < 0.5 && (p[1].abs() - 0.7).abs() < 1e-9)
            .map(|(_, &k)| k)
            .collect();
        assert!(!mid.is_empty());
        assert!(mid.iter().all(|k| k.abs() < 0.1 * PI.sqrt()), "{mid:?}");
    }
}
