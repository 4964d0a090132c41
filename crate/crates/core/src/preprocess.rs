//! Contour normalization and rotation-only Procrustes registration.
//!
//! [`normalize`] brings a raw contour into a canonical frame:
//!
//! 1. resample to [`N_POINTS`] points at uniform arc length,
//! 2. orient clockwise (negative shoelace area),
//! 3. rotate the major axis of the vertex covariance onto +x, picking the
//!    half-turn that makes the third central moment of x non-negative,
//! 4. move the polygon's area centroid to the origin,
//! 5. scale to unit area,
//! 6. start at the vertex with the largest x (ties: largest y).
//!
//! Step 1 is repeated until the polygon is a fixed point of resampling, which
//! makes the whole normalization idempotent.
//!
//! [`procrustes_align`] then rotates a batch towards its evolving mean shape,
//! with point correspondence by index.

use serde::{Deserialize, Serialize};

use crate::contour_io::{Contour, ShapeClass};
use crate::error::{Error, Result};
use crate::geometry::{self, area_centroid, signed_area};
use crate::Point;

pub const N_POINTS: usize = 100;
pub const DEFAULT_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 100;

/// Tolerance used when checking registration invariants on inputs.
const INVARIANT_TOL: f64 = 1e-8;
const RESAMPLE_FIXED_POINT_TOL: f64 = 1e-13;
const RESAMPLE_MAX_PASSES: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisteredContour {
    pub id: i64,
    pub points: Vec<Point>,
    pub class_label: Option<ShapeClass>,
}

impl RegisteredContour {
    /// Wraps points that are expected to satisfy the registration invariants,
    /// checking them.
    pub fn from_contour(c: Contour) -> Result<Self> {
        let r = RegisteredContour {
            id: c.id,
            points: c.points,
            class_label: c.class_label,
        };
        r.check(r.points.len())?;
        Ok(r)
    }

    pub fn to_contour(&self) -> Contour {
        Contour {
            id: self.id,
            points: self.points.clone(),
            class_label: self.class_label,
        }
    }

    /// Interleaved `(x1, y1, ..., xN, yN)`.
    pub fn flatten(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| [p[0], p[1]]).collect()
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        let id = self.id;
        if self.points.len() != n {
            return Err(Error::NotNormalized(format!(
                "contour {id} has {} points, expected {n}",
                self.points.len()
            )));
        }
        let a = signed_area(&self.points);
        if (a + 1.0).abs() > INVARIANT_TOL {
            return Err(Error::NotNormalized(format!(
                "contour {id} has signed area {a}, expected -1"
            )));
        }
        match area_centroid(&self.points) {
            Some(c) if c[0].abs() <= INVARIANT_TOL && c[1].abs() <= INVARIANT_TOL => Ok(()),
            c => Err(Error::NotNormalized(format!(
                "contour {id} centroid {c:?} is not at the origin"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanShape {
    pub points: Vec<Point>,
    pub iterations_used: usize,
    pub final_delta: f64,
}

/// Resamples to `n` points equally spaced in arc length along the closed
/// polyline, starting at the first input point.
pub fn resample(c: &Contour, n: usize) -> Result<Contour> {
    if n < 3 {
        return Err(Error::InvalidParams(format!("cannot resample to {n} points")));
    }
    let points = resample_points(&c.points, n)
        .ok_or_else(|| Error::DegenerateContour(format!("contour {} has zero perimeter", c.id)))?;
    Ok(Contour {
        id: c.id,
        points,
        class_label: c.class_label,
    })
}

fn resample_points(pts: &[Point], n: usize) -> Option<Vec<Point>> {
    let m = pts.len();
    let seg: Vec<f64> = (0..m).map(|i| geometry::dist(pts[i], pts[(i + 1) % m])).collect();
    let total: f64 = seg.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    let step = total / n as f64;
    let mut out = Vec::with_capacity(n);
    out.push(pts[0]);
    let mut i = 0;
    let mut seg_start = 0.0;
    for k in 1..n {
        let target = k as f64 * step;
        while i < m - 1 && seg_start + seg[i] < target {
            seg_start += seg[i];
            i += 1;
        }
        let a = pts[i];
        let b = pts[(i + 1) % m];
        let t = if seg[i] > 0.0 {
            ((target - seg_start) / seg[i]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
    }
    Some(out)
}

/// Resamples repeatedly until the polygon reproduces itself.
fn resample_fixed_point(pts: &[Point], n: usize) -> Option<Vec<Point>> {
    let mut cur = resample_points(pts, n)?;
    let scale = geometry::perimeter(&cur);
    for _ in 0..RESAMPLE_MAX_PASSES {
        let next = resample_points(&cur, n)?;
        let moved = cur
            .iter()
            .zip(&next)
            .map(|(a, b)| geometry::dist(*a, *b))
            .fold(0.0, f64::max);
        cur = next;
        if moved <= RESAMPLE_FIXED_POINT_TOL * scale {
            break;
        }
    }
    Some(cur)
}

/// Canonical pose: see the module docs for the exact sequence of steps.
pub fn normalize(c: &Contour) -> Result<RegisteredContour> {
    normalize_n(c, N_POINTS)
}

pub fn normalize_n(c: &Contour, n: usize) -> Result<RegisteredContour> {
    let degenerate = |why: &str| Error::DegenerateContour(format!("contour {}: {why}", c.id));
    let mut pts = resample_fixed_point(&c.points, n).ok_or_else(|| degenerate("zero perimeter"))?;

    let area = signed_area(&pts);
    let extent = geometry::perimeter(&pts);
    if !(area.abs() > 1e-12 * extent * extent) {
        return Err(degenerate("zero area or collinear points"));
    }
    if area > 0.0 {
        pts.reverse();
    }

    let theta = major_axis_angle(&pts);
    geometry::rotate(&mut pts, -theta);
    let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n as f64;
    let skew: f64 = pts.iter().map(|p| (p[0] - mx).powi(3)).sum();
    if skew < 0.0 {
        for p in pts.iter_mut() {
            *p = [-p[0], -p[1]];
        }
    }

    let centroid = area_centroid(&pts).ok_or_else(|| degenerate("zero area"))?;
    geometry::translate(&mut pts, -centroid[0], -centroid[1]);
    let a = signed_area(&pts).abs();
    geometry::scale(&mut pts, 1.0 / a.sqrt());

    let start = start_index(&pts);
    pts.rotate_left(start);

    if pts.iter().flatten().any(|v| !v.is_finite()) {
        return Err(degenerate("non-finite coordinates after normalization"));
    }
    Ok(RegisteredContour {
        id: c.id,
        points: pts,
        class_label: c.class_label,
    })
}

/// Orientation of the major eigenvector of the vertex covariance.
fn major_axis_angle(pts: &[Point]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    0.5 * (2.0 * sxy).atan2(sxx - syy)
}

fn start_index(pts: &[Point]) -> usize {
    let mut best = 0;
    for (i, p) in pts.iter().enumerate() {
        let b = pts[best];
        if p[0] > b[0] || (p[0] == b[0] && p[1] > b[1]) {
            best = i;
        }
    }
    best
}

/// Angle that rotates `shape` onto `reference` in the least-squares sense,
/// with correspondence by index.
pub fn optimal_rotation(shape: &[Point], reference: &[Point]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (p, v) in shape.iter().zip(reference) {
        num += p[0] * v[1] - p[1] * v[0];
        den += p[0] * v[0] + p[1] * v[1];
    }
    num.atan2(den)
}

pub fn sum_sq_dist(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
        .sum()
}

fn rms_dist(a: &[Point], b: &[Point]) -> f64 {
    (sum_sq_dist(a, b) / a.len() as f64).sqrt()
}

fn procrustes_ss(batch: &[RegisteredContour], n: usize) -> f64 {
    let mut mean = vec![[0.0, 0.0]; n];
    for c in batch {
        for (m, p) in mean.iter_mut().zip(&c.points) {
            m[0] += p[0];
            m[1] += p[1];
        }
    }
    let k = batch.len() as f64;
    mean.iter_mut().for_each(|m| *m = [m[0] / k, m[1] / k]);
    batch.iter().map(|c| sum_sq_dist(&c.points, &mean)).sum()
}

/// Pointwise mean, re-centered and rescaled to unit area. Summation runs in
/// input order.
fn mean_shape(batch: &[RegisteredContour], n: usize) -> Result<Vec<Point>> {
    let mut mean = vec![[0.0, 0.0]; n];
    for c in batch {
        for (m, p) in mean.iter_mut().zip(&c.points) {
            m[0] += p[0];
            m[1] += p[1];
        }
    }
    let k = batch.len() as f64;
    for m in mean.iter_mut() {
        m[0] /= k;
        m[1] /= k;
    }
    let centroid = area_centroid(&mean).ok_or_else(|| Error::DegenerateContour("mean shape has zero area".into()))?;
    geometry::translate(&mut mean, -centroid[0], -centroid[1]);
    let a = signed_area(&mean).abs();
    geometry::scale(&mut mean, 1.0 / a.sqrt());
    Ok(mean)
}

#[derive(Debug, Clone)]
pub struct Alignment {
    pub contours: Vec<RegisteredContour>,
    pub mean: MeanShape,
    /// Procrustes sum of squares `Σ |X_i − X̄|²` about the plain mean of the
    /// rotated contours, after each rotation pass.
    pub objective: Vec<f64>,
}

/// Iteratively rotates each contour towards the batch mean until the mean
/// moves by less than `threshold` (RMS over points) or `max_iter` passes.
pub fn procrustes_align(batch: &[RegisteredContour], threshold: f64, max_iter: usize) -> Result<Alignment> {
    let first = batch
        .first()
        .ok_or_else(|| Error::InsufficientData("empty batch".into()))?;
    let n = first.points.len();
    for c in batch {
        c.check(n)?;
    }
    let mut contours = batch.to_vec();
    let mut reference = mean_shape(&contours, n)?;
    let mut objective = Vec::new();
    let mut iterations = 0;
    let mut delta = f64::INFINITY;
    while iterations < max_iter.max(1) {
        iterations += 1;
        for c in contours.iter_mut() {
            let theta = optimal_rotation(&c.points, &reference);
            geometry::rotate(&mut c.points, theta);
        }
        objective.push(procrustes_ss(&contours, n));
        // The objective is blind to a common rotation of every contour and
        // the mean, so pin the mean's orientation to the previous one.
        let mut next = mean_shape(&contours, n)?;
        let theta = optimal_rotation(&next, &reference);
        geometry::rotate(&mut next, theta);
        delta = rms_dist(&next, &reference);
        reference = next;
        if delta < threshold {
            break;
        }
    }
    Ok(Alignment {
        contours,
        mean: MeanShape {
            points: reference,
            iterations_used: iterations,
            final_delta: delta,
        },
        objective,
    })
}

/// One-shot rotation of a registered contour onto a stored mean shape.
pub fn align_to_mean(c: &RegisteredContour, mean: &MeanShape) -> Result<RegisteredContour> {
    if c.points.len() != mean.points.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.points.len(),
            got: c.points.len(),
        });
    }
    let theta = optimal_rotation(&c.points, &mean.points);
    let mut out = c.clone();
    geometry::rotate(&mut out.points, theta);
    Ok(out)
}
