//! Planar polygon primitives shared by preprocessing and descriptors.
//!
//! Polygons are slices of points with an implicit closing edge from the last
//! point back to the first.

use crate::Point;

/// Shoelace signed area. Positive for counterclockwise traversal.
pub fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let [x0, y0] = pts[i];
        let [x1, y1] = pts[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    0.5 * acc
}

pub fn perimeter(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n).map(|i| dist(pts[i], pts[(i + 1) % n])).sum()
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Area centroid of the filled polygon. `None` when the area vanishes.
pub fn area_centroid(pts: &[Point]) -> Option<Point> {
    let a = signed_area(pts);
    if a.abs() < 1e-300 || !a.is_finite() {
        return None;
    }
    let n = pts.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let [x0, y0] = pts[i];
        let [x1, y1] = pts[(i + 1) % n];
        let cross = x0 * y1 - x1 * y0;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    Some([cx / (6.0 * a), cy / (6.0 * a)])
}

pub fn translate(pts: &mut [Point], dx: f64, dy: f64) {
    for p in pts {
        p[0] += dx;
        p[1] += dy;
    }
}

pub fn scale(pts: &mut [Point], s: f64) {
    for p in pts {
        p[0] *= s;
        p[1] *= s;
    }
}

/// Rotates counterclockwise by `theta` radians about the origin.
pub fn rotate(pts: &mut [Point], theta: f64) {
    let (s, c) = theta.sin_cos();
    for p in pts {
        let [x, y] = *p;
        *p = [c * x - s * y, s * x + c * y];
    }
}

pub fn rotated(pts: &[Point], theta: f64) -> Vec<Point> {
    let mut out = pts.to_vec();
    rotate(&mut out, theta);
    out
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * f64::from(n - i) / f64::from(i + 1);
    }
    r
}

/// Raw area moment `∫∫ x^p y^q dA` of the filled polygon, evaluated exactly
/// from the boundary with Green's theorem. The sign follows the winding, so
/// callers usually divide by `signed_area(..).signum()`.
pub fn polygon_moment(pts: &[Point], p: u32, q: u32) -> f64 {
    let n = pts.len();
    let norm = f64::from((p + q + 2) * (p + q + 1)) * binomial(p + q, p);
    let mut acc = 0.0;
    for i in 0..n {
        let [xa, ya] = pts[i];
        let [xb, yb] = pts[(i + 1) % n];
        let cross = xa * yb - xb * ya;
        let mut inner = 0.0;
        for k in 0..=p {
            for l in 0..=q {
                inner += binomial(k + l, l)
                    * binomial(p + q - k - l, q - l)
                    * xb.powi(k as i32)
                    * xa.powi((p - k) as i32)
                    * yb.powi(l as i32)
                    * ya.powi((q - l) as i32);
            }
        }
        acc += cross * inner;
    }
    acc / norm
}

/// Second central moments `(mu20, mu11, mu02)` of the filled polygon divided
/// by its area, i.e. the covariance of a uniform density over the region.
pub fn region_covariance(pts: &[Point]) -> Option<[f64; 3]> {
    let c = area_centroid(pts)?;
    let mut shifted = pts.to_vec();
    translate(&mut shifted, -c[0], -c[1]);
    let a = signed_area(&shifted);
    Some([
        polygon_moment(&shifted, 2, 0) / a,
        polygon_moment(&shifted, 1, 1) / a,
        polygon_moment(&shifted, 0, 2) / a,
    ])
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull by Andrew's monotone chain, counterclockwise, without
/// collinear points.
pub fn convex_hull(pts: &[Point]) -> Vec<Point> {
    let mut p: Vec<Point> = pts.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * p.len());
    for &pt in &p {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0.0 {
            hull.pop();
        }
        hull.push(pt);
    }
    let lower = hull.len() + 1;
    for &pt in p.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0.0 {
            hull.pop();
        }
        hull.push(pt);
    }
    hull.pop();
    hull
}

/// Largest vertex-to-vertex distance of a counterclockwise convex hull, by
/// rotating calipers over antipodal pairs.
pub fn max_feret(hull: &[Point]) -> f64 {
    let n = hull.len();
    match n {
        0 | 1 => return 0.0,
        2 => return dist(hull[0], hull[1]),
        _ => {}
    }
    let mut best = 0.0f64;
    let mut j = 1;
    for i in 0..n {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        // advance j while the triangle (a, b, hull[j+1]) grows
        while cross(a, b, hull[(j + 1) % n]).abs() > cross(a, b, hull[j]).abs() {
            j = (j + 1) % n;
        }
        best = best.max(dist(a, hull[j])).max(dist(b, hull[j]));
    }
    best
}

/// Minimum-area enclosing rectangle of a convex hull as `(long side, short
/// side)`. One rectangle side is always collinear with a hull edge, so every
/// edge direction is tried with calipers on the extreme vertices.
pub fn min_area_rect(hull: &[Point]) -> (f64, f64) {
    let n = hull.len();
    if n < 3 {
        let d = if n == 2 { dist(hull[0], hull[1]) } else { 0.0 };
        return (d, 0.0);
    }
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..n {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        let len = dist(a, b);
        if len == 0.0 {
            continue;
        }
        let u = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
        let (mut lo_u, mut hi_u, mut hi_v) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for p in hull {
            let d = [p[0] - a[0], p[1] - a[1]];
            let pu = d[0] * u[0] + d[1] * u[1];
            let pv = -d[0] * u[1] + d[1] * u[0];
            lo_u = lo_u.min(pu);
            hi_u = hi_u.max(pu);
            hi_v = hi_v.max(pv.abs());
        }
        let w = hi_u - lo_u;
        let area = w * hi_v;
        if area < best.0 {
            best = (area, w, hi_v);
        }
    }
    let (w, h) = (best.1, best.2);
    (w.max(h), w.min(h))
}

/// Axis-aligned bounds `(min_x, min_y, max_x, max_y)`.
pub fn bounds(pts: &[Point]) -> (f64, f64, f64, f64) {
    pts.iter().fold(
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), p| (a.min(p[0]), b.min(p[1]), c.max(p[0]), d.max(p[1])),
    )
}

/// Scanline fill: for each row `r` of a `width x height` grid whose pixel
/// centers sit at `origin + (c + 0.5, r + 0.5) * pixel`, marks pixels whose
/// centers fall inside the polygon (even-odd rule). Row 0 is the minimum-y row.
pub fn rasterize(pts: &[Point], width: usize, height: usize, origin: Point, pixel: f64) -> Vec<bool> {
    let mut mask = vec![false; width * height];
    let n = pts.len();
    let mut xs: Vec<f64> = Vec::new();
    for r in 0..height {
        let y = origin[1] + (r as f64 + 0.5) * pixel;
        xs.clear();
        for i in 0..n {
            let [x0, y0] = pts[i];
            let [x1, y1] = pts[(i + 1) % n];
            if (y0 <= y && y < y1) || (y1 <= y && y < y0) {
                xs.push(x0 + (y - y0) / (y1 - y0) * (x1 - x0));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let c0 = ((pair[0] - origin[0]) / pixel - 0.5).ceil().max(0.0) as usize;
            let c1 = ((pair[1] - origin[0]) / pixel - 0.5).floor();
            if c1 < 0.0 {
                continue;
            }
            let c1 = (c1 as usize).min(width.saturating_sub(1));
            if c0 <= c1 {
                mask[r * width + c0..=r * width + c1].fill(true);
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point> {
        vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]]
    }

    #[test]
    fn square_area_and_moments() {
        let s = square();
        assert_eq!(signed_area(&s), 4.0);
        assert_eq!(area_centroid(&s), Some([1.0, 1.0]));
        // ∫∫ x² over [0,2]² = 8/3 * 2
        assert!((polygon_moment(&s, 2, 0) - 16.0 / 3.0).abs() < 1e-12);
        // ∫∫ x y = 2 * 2
        assert!((polygon_moment(&s, 1, 1) - 4.0).abs() < 1e-12);
        let cov = region_covariance(&s).unwrap();
        assert!((cov[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!(cov[1].abs() < 1e-12);
    }

    #[test]
    fn hull_drops_interior_points() {
        let mut pts = square();
        pts.push([1.0, 1.0]);
        pts.push([1.0, 0.0]);
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!(signed_area(&h) > 0.0);
    }

    #[test]
    fn calipers_match_brute_force() {
        let pts: Vec<Point> = (0..37)
            .map(|i| {
                let t = i as f64 * 0.7;
                [3.0 * t.cos() + 0.3 * (5.0 * t).sin(), 1.2 * t.sin()]
            })
            .collect();
        let hull = convex_hull(&pts);
        let mut brute = 0.0f64;
        for a in &hull {
            for b in &hull {
                brute = brute.max(dist(*a, *b));
            }
        }
        assert!((max_feret(&hull) - brute).abs() < 1e-12);
    }

    #[test]
    fn min_rect_of_rotated_rectangle() {
        let mut r = vec![[0.0, 0.0], [3.0, 0.0], [3.0, 1.0], [0.0, 1.0]];
        rotate(&mut r, 0.4);
        let (w, h) = min_area_rect(&convex_hull(&r));
        assert!((w - 3.0).abs() < 1e-12 && (h - 1.0).abs() < 1e-12);
    }

    #[test]
    fn raster_square_fills_interior() {
        let m = rasterize(&square(), 4, 4, [0.0, 0.0], 0.5);
        assert!(m.iter().all(|&b| b));
        let m = rasterize(&square(), 6, 6, [-0.5, -0.5], 0.5);
        assert_eq!(m.iter().filter(|&&b| b).count(), 16);
    }
}
