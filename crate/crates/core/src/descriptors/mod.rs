//! Shape descriptors computed on registered contours.
//!
//! Each [`Family`] is either a raw descriptor vector or the 32
//! [`stats_features`] summary of one. Batch extraction keeps input order and
//! drops contours whose descriptors fail, listing them in an [`ExtractReport`].

mod curvature;
mod efd;
mod scalar;
mod stats;
mod wavelet;
mod zernike;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use curvature::{curvature, vertex_arc_weights};
pub use efd::{efd, efd_features, polygon_at, reconstruct, reconstruction_rmse, EfdCoefficients};
pub use scalar::{equivalent_ellipse_axes, hu_moments, scalar_features, SCALAR_NAMES};
pub use stats::{stats_features, stats_values, MIN_LEN as STATS_MIN_LEN, STAT_NAMES};
pub use wavelet::{haar_step, resample_periodic, wavelet_features, WaveletCoefficients};
pub use zernike::{
    moment_orders, rasterize_contour, zernike_features, zernike_from_mask, zernike_names, Mask,
    DEFAULT_GRID as ZERNIKE_GRID, DEFAULT_MAX_DEGREE as ZERNIKE_MAX_DEGREE,
};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureVector};
use crate::preprocess::RegisteredContour;

/// Distance of each point from the origin, which is the centroid of a
/// registered contour.
pub fn radii(c: &RegisteredContour) -> Vec<f64> {
    c.points.iter().map(|p| p[0].hypot(p[1])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Family {
    Scalar,
    CurvatureRaw,
    CurvatureStats,
    RadiiRaw,
    RadiiStats,
    Fourier10Raw,
    Fourier10Stats,
    Fourier20Raw,
    Fourier20Stats,
    WaveletRaw,
    WaveletStats,
    ZernikeRaw,
    ZernikeStats,
}

impl Family {
    pub const ALL: [Family; 13] = [
        Family::Scalar,
        Family::CurvatureRaw,
        Family::CurvatureStats,
        Family::RadiiRaw,
        Family::RadiiStats,
        Family::Fourier10Raw,
        Family::Fourier10Stats,
        Family::Fourier20Raw,
        Family::Fourier20Stats,
        Family::WaveletRaw,
        Family::WaveletStats,
        Family::ZernikeRaw,
        Family::ZernikeStats,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Scalar => "scalar",
            Family::CurvatureRaw => "curvature_raw",
            Family::CurvatureStats => "curvature_stats",
            Family::RadiiRaw => "radii_raw",
            Family::RadiiStats => "radii_stats",
            Family::Fourier10Raw => "fourier10_raw",
            Family::Fourier10Stats => "fourier10_stats",
            Family::Fourier20Raw => "fourier20_raw",
            Family::Fourier20Stats => "fourier20_stats",
            Family::WaveletRaw => "wavelet_raw",
            Family::WaveletStats => "wavelet_stats",
            Family::ZernikeRaw => "zernike_raw",
            Family::ZernikeStats => "zernike_stats",
        }
    }

    pub fn is_stats(self) -> bool {
        self.name().ends_with("_stats")
    }

    /// The raw family a stats family summarizes (identity for raw families).
    fn raw(self) -> Family {
        match self {
            Family::CurvatureStats => Family::CurvatureRaw,
            Family::RadiiStats => Family::RadiiRaw,
            Family::Fourier10Stats => Family::Fourier10Raw,
            Family::Fourier20Stats => Family::Fourier20Raw,
            Family::WaveletStats => Family::WaveletRaw,
            Family::ZernikeStats => Family::ZernikeRaw,
            f => f,
        }
    }

    fn prefix(self) -> &'static str {
        let n = self.raw().name();
        n.strip_suffix("_raw").unwrap_or(n)
    }

    /// Column count, independent of the data.
    pub fn width(self) -> usize {
        if self.is_stats() {
            return STAT_NAMES.len();
        }
        match self {
            Family::Scalar => SCALAR_NAMES.len(),
            Family::CurvatureRaw | Family::RadiiRaw => crate::preprocess::N_POINTS,
            Family::Fourier10Raw => 40,
            Family::Fourier20Raw => 80,
            Family::WaveletRaw => 2 * wavelet::K,
            Family::ZernikeRaw => moment_orders(ZERNIKE_MAX_DEGREE).len(),
            _ => unreachable!(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

impl TryFrom<String> for Family {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.name().to_string()
    }
}

fn raw_features(c: &RegisteredContour, family: Family) -> Result<FeatureVector> {
    let pts = &c.points;
    Ok(match family {
        Family::Scalar => scalar_features(pts)?,
        Family::CurvatureRaw => FeatureVector::numbered("curvature_", curvature(pts)?),
        Family::RadiiRaw => FeatureVector::numbered("radii_", radii(c)),
        Family::Fourier10Raw => efd_features(pts, 10)?,
        Family::Fourier20Raw => efd_features(pts, 20)?,
        Family::WaveletRaw => wavelet_features(&radii(c))?.features(),
        Family::ZernikeRaw => zernike_features(pts, ZERNIKE_MAX_DEGREE, ZERNIKE_GRID)?,
        _ => unreachable!("stats family passed as raw"),
    })
}

/// Features of one registered contour.
pub fn extract_one(c: &RegisteredContour, family: Family) -> Result<FeatureVector> {
    c.check(crate::preprocess::N_POINTS)?;
    let raw = raw_features(c, family.raw())?;
    let f = if family.is_stats() {
        stats_features(&raw.values, family.prefix())?
    } else {
        raw
    };
    if let Some(col) = f.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteFeature { row: 0, col });
    }
    Ok(f)
}

/// Column names of a family.
pub fn feature_names(family: Family) -> Vec<String> {
    if family.is_stats() {
        return STAT_NAMES
            .iter()
            .map(|m| format!("{}_stat_{m}", family.prefix()))
            .collect();
    }
    let numbered = |prefix: &str, n: usize| (1..=n).map(|i| format!("{prefix}{i}")).collect();
    match family {
        Family::Scalar => SCALAR_NAMES.iter().map(|s| s.to_string()).collect(),
        Family::CurvatureRaw => numbered("curvature_", family.width()),
        Family::RadiiRaw => numbered("radii_", family.width()),
        Family::Fourier10Raw | Family::Fourier20Raw => (1..=family.width() / 4)
            .flat_map(|i| ["a", "b", "c", "d"].map(|t| format!("fourier_{t}{i}")))
            .collect(),
        Family::WaveletRaw => {
            let mut names: Vec<String> = numbered("wav_a", wavelet::K);
            names.extend(numbered("wav_d", wavelet::K));
            names
        }
        Family::ZernikeRaw => zernike_names(ZERNIKE_MAX_DEGREE),
        _ => unreachable!(),
    }
}

/// Contours excluded from a batch extraction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractReport {
    pub failed: Vec<(i64, String)>,
}

impl ExtractReport {
    pub fn failed_ids(&self) -> Vec<i64> {
        self.failed.iter().map(|(id, _)| *id).collect()
    }
}

/// Extracts a family for every contour, in input order, in parallel.
pub fn extract(batch: &[RegisteredContour], family: Family) -> (FeatureMatrix, ExtractReport) {
    let results: Vec<Result<FeatureVector>> = batch.par_iter().map(|c| extract_one(c, family)).collect();
    let mut m = FeatureMatrix::new(feature_names(family));
    let mut report = ExtractReport::default();
    for (c, r) in batch.iter().zip(results) {
        match r {
            Ok(f) => {
                debug_assert_eq!(f.names, m.names);
                m.push_row(c.id, c.class_label, &f.values)
                    .expect("family width is fixed");
            }
            Err(e) => {
                log::warn!("contour {}: {} extraction failed: {e}", c.id, family);
                report.failed.push((c.id, e.to_string()));
            }
        }
    }
    (m, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour_io::Contour;
    use crate::preprocess::normalize;
    use std::f64::consts::TAU;

    fn shape(id: i64, k: f64) -> RegisteredContour {
        let pts = (0..180)
            .map(|i| {
                let t = TAU * i as f64 / 180.0;
                let r = 1.0 + 0.25 * (k * t).cos() + 0.05 * (2.0 * t).sin();
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        normalize(&Contour::new(id, pts, None).unwrap()).unwrap()
    }

    #[test]
    fn family_widths_and_names() {
        let c = shape(1, 3.0);
        for f in Family::ALL {
            let v = extract_one(&c, f).unwrap();
            assert_eq!(v.len(), f.width(), "{f}");
            assert_eq!(v.names, feature_names(f), "{f}");
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert_eq!(Family::ZernikeStats.width(), 32);
        assert_eq!(feature_names(Family::RadiiStats)[0], "radii_stat_mean");
        assert!("pca95".parse::<Family>().is_err());
    }

    #[test]
    fn circle_radii_are_constant() {
        let r0 = 1.0 / std::f64::consts::PI.sqrt();
        let circle = RegisteredContour {
            id: 0,
            points: (0..100)
                .map(|i| {
                    let t = -TAU * i as f64 / 100.0;
                    [r0 * t.cos(), r0 * t.sin()]
                })
                .collect(),
            class_label: None,
        };
        for r in radii(&circle) {
            assert!((r - r0).abs() < 1e-6, "{r}");
        }
        // a normalized 100-gon has its vertices slightly outside the unit-area circle
        let pts = circle.points.clone();
        let reg = normalize(&Contour::new(0, pts, None).unwrap()).unwrap();
        let rs = radii(&reg);
        let (lo, hi) = rs.iter().fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        assert!(hi - lo < 1e-9 && (lo / r0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ellipse_radii_ratio() {
        let pts = (0..1000)
            .map(|i| {
                let t = TAU * i as f64 / 1000.0;
                [2.0 * t.cos(), t.sin()]
            })
            .collect();
        let reg = normalize(&Contour::new(0, pts, None).unwrap()).unwrap();
        let rs = radii(&reg);
        let hi = rs.iter().cloned().fold(0.0, f64::max);
        let lo = rs.iter().cloned().fold(f64::MAX, f64::min);
        assert!(rs.iter().all(|&r| r > 0.0));
        assert!((hi / lo - 2.0).abs() < 0.02, "{}", hi / lo);
    }

    #[test]
    fn failures_are_reported_not_fatal() {
        let mut batch: Vec<RegisteredContour> = (0..10).map(|i| shape(i, 2.0 + i as f64 % 4.0)).collect();
        batch[4].points[7] = [f64::NAN, 0.0];
        let (m, report) = extract(&batch, Family::Scalar);
        assert_eq!(m.n_rows(), 9);
        assert_eq!(report.failed_ids(), vec![4]);
        assert!(!m.ids.contains(&4));
    }

    #[test]
    fn extraction_is_deterministic() {
        let batch: Vec<RegisteredContour> = (0..6).map(|i| shape(i, 3.0 + i as f64)).collect();
        for f in [Family::WaveletRaw, Family::ZernikeStats, Family::CurvatureStats] {
            let a = extract(&batch, f).0.to_csv_string();
            let b = extract(&batch, f).0.to_csv_string();
            assert_eq!(a, b);
        }
    }
}
