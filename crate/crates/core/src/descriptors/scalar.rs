//! The 23 scalar shape features. Area-type moments are exact polygon
//! integrals (Green's theorem), not raster counts.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::geometry::{self, polygon_moment, signed_area};
use crate::Point;

pub const SCALAR_NAMES: [&str; 23] = [
    "bbox_area",
    "hull_area",
    "perimeter",
    "major_axis",
    "minor_axis",
    "axis_ratio",
    "eccentricity",
    "extent",
    "solidity",
    "circularity",
    "roundness",
    "max_feret",
    "minbbox_w",
    "minbbox_h",
    "bbox_w",
    "bbox_h",
    "hu_1",
    "hu_2",
    "hu_3",
    "hu_4",
    "hu_5",
    "hu_6",
    "hu_7",
];

/// The seven Hu invariants of the filled polygon.
pub fn hu_moments(pts: &[Point]) -> Result<[f64; 7]> {
    let c = geometry::area_centroid(pts).ok_or_else(|| Error::DegenerateContour("zero-area polygon".into()))?;
    let mut p = pts.to_vec();
    geometry::translate(&mut p, -c[0], -c[1]);
    let sign = signed_area(&p).signum();
    let mu = |a: u32, b: u32| sign * polygon_moment(&p, a, b);
    let m00 = mu(0, 0);
    let eta = |a: u32, b: u32| mu(a, b) / m00.powf(1.0 + f64::from(a + b) / 2.0);
    let (n20, n02, n11) = (eta(2, 0), eta(0, 2), eta(1, 1));
    let (n30, n03, n21, n12) = (eta(3, 0), eta(0, 3), eta(2, 1), eta(1, 2));

    let h1 = n20 + n02;
    let h2 = (n20 - n02).powi(2) + 4.0 * n11 * n11;
    let h3 = (n30 - 3.0 * n12).powi(2) + (3.0 * n21 - n03).powi(2);
    let h4 = (n30 + n12).powi(2) + (n21 + n03).powi(2);
    let a = n30 + n12;
    let b = n21 + n03;
    let h5 = (n30 - 3.0 * n12) * a * (a * a - 3.0 * b * b) + (3.0 * n21 - n03) * b * (3.0 * a * a - b * b);
    let h6 = (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b;
    let h7 = (3.0 * n21 - n03) * a * (a * a - 3.0 * b * b) - (n30 - 3.0 * n12) * b * (3.0 * a * a - b * b);
    Ok([h1, h2, h3, h4, h5, h6, h7])
}

/// Lengths `(major, minor)` of the ellipse with the same second central
/// moments as the filled polygon.
pub fn equivalent_ellipse_axes(pts: &[Point]) -> Result<(f64, f64)> {
    let [sxx, sxy, syy] =
        geometry::region_covariance(pts).ok_or_else(|| Error::DegenerateContour("zero-area polygon".into()))?;
    let half_tr = 0.5 * (sxx + syy);
    let disc = (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
    let l1 = half_tr + disc;
    let l2 = (half_tr - disc).max(0.0);
    Ok((4.0 * l1.sqrt(), 4.0 * l2.sqrt()))
}

pub fn scalar_features(pts: &[Point]) -> Result<FeatureVector> {
    let area = signed_area(pts).abs();
    if !(area > 0.0) {
        return Err(Error::DegenerateContour("zero-area polygon".into()));
    }
    let perimeter = geometry::perimeter(pts);
    let hull = geometry::convex_hull(pts);
    let hull_area = signed_area(&hull).abs();
    let (x0, y0, x1, y1) = geometry::bounds(pts);
    let (bbox_w, bbox_h) = (x1 - x0, y1 - y0);
    let bbox_area = bbox_w * bbox_h;
    let (major, minor) = equivalent_ellipse_axes(pts)?;
    let ratio = minor / major;
    let (mbw, mbh) = geometry::min_area_rect(&hull);
    let hu = hu_moments(pts)?;

    let mut values = vec![
        bbox_area,
        hull_area,
        perimeter,
        major,
        minor,
        ratio,
        (1.0 - ratio * ratio).max(0.0).sqrt(),
        area / bbox_area,
        area / hull_area,
        4.0 * PI * area / (perimeter * perimeter),
        4.0 * area / (PI * major * major),
        geometry::max_feret(&hull),
        mbw,
        mbh,
        bbox_w,
        bbox_h,
    ];
    values.extend_from_slice(&hu);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateContour("non-finite scalar feature".into()));
    }
    Ok(FeatureVector::new(
        SCALAR_NAMES.iter().map(|s| s.to_string()).collect(),
        values,
    ))
}
