//! Zernike moment magnitudes of the rasterized (filled) contour.
//!
//! The contour is placed on the grid with its area centroid at the grid
//! center and its farthest vertex on the circle of radius `grid / 2 - 1`
//! pixels; that circle is the unit disk. Deriving the disk from the exact
//! contour rather than from pixel statistics keeps its radius stable under
//! rotation.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::geometry;
use crate::Point;

pub const DEFAULT_MAX_DEGREE: usize = 8;
pub const DEFAULT_GRID: usize = 64;

/// Binary raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl Mask {
    /// The mask turned a quarter turn (exact pixel permutation).
    pub fn rotate90(&self) -> Mask {
        let (w, h) = (self.width, self.height);
        let mut data = vec![false; w * h];
        for r in 0..h {
            for c in 0..w {
                // new dims: width h, height w
                data[c * h + (h - 1 - r)] = self.data[r * w + c];
            }
        }
        Mask {
            width: h,
            height: w,
            data,
        }
    }
}

/// Rasterizes the filled polygon onto a `grid x grid` mask. The polygon's
/// area centroid sits at the grid center and its farthest vertex at
/// `grid / 2 - 1` pixels from it, so the placement does not depend on the
/// contour's orientation.
pub fn rasterize_contour(pts: &[Point], grid: usize) -> Result<Mask> {
    let c = geometry::area_centroid(pts)
        .ok_or_else(|| Error::DegenerateContour("cannot rasterize a zero-area contour".into()))?;
    let reach = pts.iter().map(|p| geometry::dist(*p, c)).fold(0.0, f64::max);
    if !(reach > 0.0) || grid < 3 {
        return Err(Error::DegenerateContour(
            "cannot rasterize a zero-extent contour".into(),
        ));
    }
    let pixel = 2.0 * reach / (grid - 2) as f64;
    let half = 0.5 * grid as f64 * pixel;
    let origin = [c[0] - half, c[1] - half];
    let data = geometry::rasterize(pts, grid, grid, origin, pixel);
    Ok(Mask {
        width: grid,
        height: grid,
        data,
    })
}

/// `(n, m)` pairs with `0 <= m <= n <= max_degree`, `n - m` even.
pub fn moment_orders(max_degree: usize) -> Vec<(usize, usize)> {
    (0..=max_degree)
        .flat_map(|n| (0..=n).filter(move |m| (n - m) % 2 == 0).map(move |m| (n, m)))
        .collect()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Coefficients of the radial polynomial R_nm as (power, coefficient).
fn radial_terms(n: usize, m: usize) -> Vec<(usize, f64)> {
    (0..=(n - m) / 2)
        .map(|s| {
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            let c = sign * factorial(n - s) / (factorial(s) * factorial((n + m) / 2 - s) * factorial((n - m) / 2 - s));
            (n - 2 * s, c)
        })
        .collect()
}

/// Moments over the disk inscribed in the mask, centred on the grid center
/// with radius `min(width, height) / 2 - 1` pixels. Pixels outside the disk
/// are ignored.
pub fn zernike_from_mask(mask: &Mask, max_degree: usize) -> Result<Vec<f64>> {
    let (cx, cy) = (0.5 * mask.width as f64, 0.5 * mask.height as f64);
    let radius = 0.5 * mask.width.min(mask.height) as f64 - 1.0;
    if !(radius > 0.0) {
        return Err(Error::DegenerateContour("mask too small for a unit disk".into()));
    }
    let fg: Vec<(f64, f64)> = mask
        .data
        .iter()
        .enumerate()
        .filter(|(_, &on)| on)
        .map(|(i, _)| ((i % mask.width) as f64 + 0.5, (i / mask.width) as f64 + 0.5))
        .filter(|p| (p.0 - cx).hypot(p.1 - cy) <= radius)
        .collect();
    if fg.is_empty() {
        return Err(Error::EmptyMask);
    }

    let orders = moment_orders(max_degree);
    let terms: Vec<Vec<(usize, f64)>> = orders.iter().map(|&(n, m)| radial_terms(n, m)).collect();
    let mut acc = vec![(0.0f64, 0.0f64); orders.len()];
    let mut rho_pow = vec![0.0; max_degree + 1];
    let mut phase = vec![(0.0, 0.0); max_degree + 1];
    for &(px, py) in &fg {
        let (x, y) = ((px - cx) / radius, (py - cy) / radius);
        let rho = x.hypot(y);
        rho_pow[0] = 1.0;
        for p in 1..=max_degree {
            rho_pow[p] = rho_pow[p - 1] * rho;
        }
        // e^{-i m θ} built by repeated multiplication with conj(z)/|z|
        let (ux, uy) = if rho > 0.0 { (x / rho, -y / rho) } else { (1.0, 0.0) };
        phase[0] = (1.0, 0.0);
        for m in 1..=max_degree {
            let (a, b) = phase[m - 1];
            phase[m] = (a * ux - b * uy, a * uy + b * ux);
        }
        for (j, &(_, m)) in orders.iter().enumerate() {
            let radial: f64 = terms[j].iter().map(|&(p, c)| c * rho_pow[p]).sum();
            acc[j].0 += radial * phase[m].0;
            acc[j].1 += radial * phase[m].1;
        }
    }
    let area_element = 1.0 / (radius * radius);
    Ok(orders
        .iter()
        .zip(acc)
        .map(|(&(n, _), (re, im))| (n as f64 + 1.0) / PI * area_element * re.hypot(im))
        .collect())
}

pub fn zernike_names(max_degree: usize) -> Vec<String> {
    moment_orders(max_degree)
        .into_iter()
        .map(|(n, m)| format!("zernike_{n}_{m}"))
        .collect()
}

pub fn zernike_features(pts: &[Point], max_degree: usize, grid: usize) -> Result<FeatureVector> {
    let mask = rasterize_contour(pts, grid)?;
    let values = zernike_from_mask(&mask, max_degree)?;
    Ok(FeatureVector::new(zernike_names(max_degree), values))
}
