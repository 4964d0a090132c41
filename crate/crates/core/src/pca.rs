//! PCA shape modes over flattened, interleaved `(x1, y1, ..., xN, yN)`
//! coordinates of aligned contours.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureVector};
use crate::preprocess::RegisteredContour;
use crate::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Row `i` is component `i`, unit length.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    /// Sum of all eigenvalues, retained or not.
    pub total_variance: f64,
    pub threshold: f64,
}

impl PcaModel {
    /// Fits on a batch and keeps the smallest number of components whose
    /// cumulative explained-variance ratio reaches `threshold`.
    pub fn fit(batch: &[RegisteredContour], threshold: f64) -> Result<Self> {
        let rows: Vec<Vec<f64>> = batch.iter().map(RegisteredContour::flatten).collect();
        Self::fit_rows(&rows, threshold)
    }

    pub fn fit_rows(rows: &[Vec<f64>], threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "variance threshold {threshold} not in (0, 1]"
            )));
        }
        if rows.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "PCA needs at least 2 contours, got {}",
                rows.len()
            )));
        }
        let d = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: r.len(),
            });
        }
        let n = rows.len();
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
        let svd = centered.svd(false, true);
        let v_t = svd.v_t.expect("v_t requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let variances: Vec<f64> = order
            .iter()
            .map(|&i| svd.singular_values[i].powi(2) / (n - 1) as f64)
            .collect();
        let total: f64 = variances.iter().sum();

        let scale = mean.iter().map(|v| v * v).sum::<f64>().max(1.0);
        let k = if total <= 1e-24 * scale {
            log::warn!("degenerate variance: all {n} training shapes coincide, keeping no components");
            0
        } else {
            let mut cum = 0.0;
            variances
                .iter()
                .position(|v| {
                    cum += v;
                    cum / total >= threshold
                })
                .map_or(variances.len(), |i| i + 1)
        };

        let components = order[..k]
            .iter()
            .map(|&i| {
                let mut c: Vec<f64> = v_t.row(i).iter().copied().collect();
                let big = c
                    .iter()
                    .enumerate()
                    .fold(0, |b, (j, v)| if v.abs() > c[b].abs() { j } else { b });
                if c[big] < 0.0 {
                    c.iter_mut().for_each(|v| *v = -*v);
                }
                c
            })
            .collect();
        Ok(PcaModel {
            mean,
            components,
            explained_variance: variances[..k].to_vec(),
            total_variance: total,
            threshold,
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.explained_variance
            .iter()
            .map(|v| {
                if self.total_variance > 0.0 {
                    v / self.total_variance
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn feature_names(&self) -> Vec<String> {
        (1..=self.n_components()).map(|i| format!("pca_{i}")).collect()
    }

    pub fn project_flat(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                got: x.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(x).zip(&self.mean).map(|((c, x), m)| c * (x - m)).sum())
            .collect())
    }

    pub fn project(&self, c: &RegisteredContour) -> Result<FeatureVector> {
        Ok(FeatureVector::new(
            self.feature_names(),
            self.project_flat(&c.flatten())?,
        ))
    }

    /// Projects a batch; failures are returned per contour, in input order.
    pub fn project_batch(&self, batch: &[RegisteredContour]) -> (FeatureMatrix, Vec<(i64, String)>) {
        let coeffs: Vec<Result<Vec<f64>>> = batch.par_iter().map(|c| self.project_flat(&c.flatten())).collect();
        let mut m = FeatureMatrix::new(self.feature_names());
        let mut failed = Vec::new();
        for (c, r) in batch.iter().zip(coeffs) {
            match r.and_then(|v| {
                if v.iter().all(|x| x.is_finite()) {
                    Ok(v)
                } else {
                    Err(Error::NonFiniteFeature { row: 0, col: 0 })
                }
            }) {
                Ok(v) => m.push_row(c.id, c.class_label, &v).expect("width matches"),
                Err(e) => failed.push((c.id, e.to_string())),
            }
        }
        (m, failed)
    }

    /// `mean + Σ coeffs[i] * component[i]` as points.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<Vec<Point>> {
        if coeffs.len() > self.n_components() {
            return Err(Error::DimensionMismatch {
                expected: self.n_components(),
                got: coeffs.len(),
            });
        }
        let mut x = self.mean.clone();
        for (a, c) in coeffs.iter().zip(&self.components) {
            for (xi, ci) in x.iter_mut().zip(c) {
                *xi += a * ci;
            }
        }
        Ok(x.chunks_exact(2).map(|p| [p[0], p[1]]).collect())
    }

    fn validate(&self) -> Result<()> {
        let d = self.mean.len();
        if d == 0 || !d.is_multiple_of(2) {
            return Err(Error::Schema(format!(
                "mean has length {d}, expected a positive even length"
            )));
        }
        if let Some((i, c)) = self.components.iter().enumerate().find(|(_, c)| c.len() != d) {
            return Err(Error::Schema(format!(
                "component {i} has length {}, expected {d}",
                c.len()
            )));
        }
        if self.explained_variance.len() != self.components.len() {
            return Err(Error::Schema(format!(
                "{} explained variances for {} components",
                self.explained_variance.len(),
                self.components.len()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("PCA model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: PcaModel = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour_io::Contour;
    use crate::preprocess::{normalize, procrustes_align};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn blob_batch(n: usize, seed: u64) -> Vec<RegisteredContour> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<RegisteredContour> = (0..n)
            .map(|i| {
                let a2: f64 = rng.gen_range(0.0..0.3);
                let a3: f64 = rng.gen_range(0.0..0.2);
                let p3: f64 = rng.gen_range(0.0..TAU);
                let pts = (0..150)
                    .map(|j| {
                        let t = TAU * j as f64 / 150.0;
                        let r = 1.0 + a2 * (2.0 * t).cos() + a3 * (3.0 * t + p3).cos();
                        [r * t.cos(), r * t.sin()]
                    })
                    .collect();
                normalize(&Contour::new(i as i64, pts, None).unwrap()).unwrap()
            })
            .collect();
        procrustes_align(&raw, 1e-6, 100).unwrap().contours
    }

    #[test]
    fn components_are_orthonormal_and_sorted() {
        let m = PcaModel::fit(&blob_batch(60, 1), 0.99).unwrap();
        assert!(m.n_components() >= 2);
        for (i, a) in m.components.iter().enumerate() {
            for (j, b) in m.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9);
            }
        }
        assert!(m.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        let ratios = m.explained_variance_ratio();
        assert!(ratios.iter().sum::<f64>() <= 1.0 + 1e-12);
        // threshold rule: k is the first index reaching the threshold
        let cum: f64 = ratios.iter().sum();
        let cum_prev: f64 = ratios[..ratios.len() - 1].iter().sum();
        assert!(cum >= 0.99 && cum_prev < 0.99);
    }

    #[test]
    fn projection_identities() {
        let batch = blob_batch(40, 2);
        let m = PcaModel::fit(&batch, 0.95).unwrap();
        let zero = m.project_flat(&m.mean).unwrap();
        assert!(zero.iter().all(|v| v.abs() < 1e-9));
        let shifted: Vec<f64> = m.mean.iter().zip(&m.components[0]).map(|(a, c)| a + 2.0 * c).collect();
        let p = m.project_flat(&shifted).unwrap();
        assert!((p[0] - 2.0).abs() < 1e-9);
        assert!(p[1..].iter().all(|v| v.abs() < 1e-9));
        let mean_pts = m.reconstruct(&[]).unwrap();
        assert_eq!(mean_pts.len(), 100);
        assert!(m.project_flat(&[0.0; 10]).is_err());
    }

    #[test]
    fn residual_matches_discarded_spectrum() {
        let batch = blob_batch(50, 3);
        let m = PcaModel::fit(&batch, 0.95).unwrap();
        let full = PcaModel::fit(&batch, 1.0).unwrap();
        let n = batch.len() as f64;
        let mut residual = 0.0;
        for c in &batch {
            let x = c.flatten();
            let coeffs = m.project_flat(&x).unwrap();
            let rec: Vec<f64> = m.reconstruct(&coeffs).unwrap().into_iter().flatten().collect();
            residual += x.iter().zip(&rec).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            // nested truncations never fit better than longer ones
            let errs: Vec<f64> = (0..=coeffs.len())
                .map(|k| {
                    let r: Vec<f64> = m.reconstruct(&coeffs[..k]).unwrap().into_iter().flatten().collect();
                    x.iter().zip(&r).map(|(a, b)| (a - b).powi(2)).sum()
                })
                .collect();
            assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
        let discarded: f64 = full.explained_variance[m.n_components()..].iter().sum();
        let mean_residual = residual / n;
        assert!((mean_residual - discarded * (n - 1.0) / n).abs() <= 1e-9 * m.total_variance);
        assert!(mean_residual <= (1.0 - 0.95) * m.total_variance);
    }

    #[test]
    fn identical_contours_keep_no_components() {
        let one = blob_batch(1, 4).remove(0);
        let m = PcaModel::fit(&vec![one.clone(); 5], 0.95).unwrap();
        assert_eq!(m.n_components(), 0);
        assert!(m.project(&one).unwrap().is_empty());
        assert!(matches!(PcaModel::fit(&[one], 0.95), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn ellipse_axis_ratio_is_one_mode() {
        let raw: Vec<RegisteredContour> = (0..30)
            .map(|i| {
                let b = 0.3 + 0.02 * i as f64;
                let pts = (0..400)
                    .map(|j| {
                        let t = TAU * j as f64 / 400.0;
                        [t.cos(), b * t.sin()]
                    })
                    .collect();
                normalize(&Contour::new(i, pts, None).unwrap()).unwrap()
            })
            .collect();
        let aligned = procrustes_align(&raw, 1e-6, 100).unwrap().contours;
        let m = PcaModel::fit(&aligned, 0.95).unwrap();
        assert!(
            m.explained_variance_ratio()[0] >= 0.99,
            "{:?}",
            m.explained_variance_ratio()
        );
    }

    #[test]
    fn json_round_trip_is_exact() {
        let batch = blob_batch(30, 5);
        let m = PcaModel::fit(&batch, 0.99).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pca.json");
        m.save(&path).unwrap();
        let back = PcaModel::load(&path).unwrap();
        assert_eq!(back, m);
        for c in &batch {
            assert_eq!(m.project(c).unwrap().values, back.project(c).unwrap().values);
        }
        let mut bad = m.clone();
        bad.components[0].pop();
        assert!(matches!(PcaModel::from_json(&bad.to_json()), Err(Error::Schema(_))));
        assert!(matches!(PcaModel::from_json("{\"mean\": 3}"), Err(Error::Schema(_))));
    }
}
