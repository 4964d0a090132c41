//! Single-level orthonormal Haar transform of the radii signal.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// Number of approximation (and of detail) coefficients.
pub const K: usize = 100;
pub const RADII_LEN: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoefficients {
    pub approx: Vec<f64>,
    pub detail: Vec<f64>,
}

impl WaveletCoefficients {
    /// `wav_a1..wav_a100` followed by `wav_d1..wav_d100`.
    pub fn features(&self) -> FeatureVector {
        let mut f = FeatureVector::numbered("wav_a", self.approx.clone());
        let d = FeatureVector::numbered("wav_d", self.detail.clone());
        f.names.extend(d.names);
        f.values.extend(d.values);
        f
    }
}

/// Periodic linear resampling of `signal` to `len` samples, keeping sample 0.
pub fn resample_periodic(signal: &[f64], len: usize) -> Vec<f64> {
    let n = signal.len();
    (0..len)
        .map(|j| {
            let pos = j as f64 * n as f64 / len as f64;
            let i = (pos.floor() as usize).min(n - 1);
            let f = pos - i as f64;
            signal[i] + f * (signal[(i + 1) % n] - signal[i])
        })
        .collect()
}

/// One Haar level: pairwise scaled sums and differences.
pub fn haar_step(signal: &[f64]) -> (Vec<f64>, Vec<f64>) {
    signal
        .chunks_exact(2)
        .map(|p| ((p[0] + p[1]) * FRAC_1_SQRT_2, (p[0] - p[1]) * FRAC_1_SQRT_2))
        .unzip()
}

pub fn wavelet_features(radii: &[f64]) -> Result<WaveletCoefficients> {
    if radii.len() != RADII_LEN {
        return Err(Error::LengthMismatch {
            expected: RADII_LEN,
            got: radii.len(),
        });
    }
    let (approx, detail) = haar_step(&resample_periodic(radii, 2 * K));
    Ok(WaveletCoefficients { approx, detail })
}
