//! Fixed 32-metric summary of a raw descriptor vector.
//!
//! Counting, autocorrelation and variation metrics wrap around the end of
//! the vector (contour signals are periodic), so every metric except the two
//! arg-positions is invariant under cyclic shifts.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

pub const MIN_LEN: usize = 8;
const ENTROPY_BINS: usize = 16;

pub const STAT_NAMES: [&str; 32] = [
    "mean",
    "std",
    "variance",
    "min",
    "max",
    "range",
    "median",
    "q25",
    "q75",
    "iqr",
    "skewness",
    "kurtosis",
    "rms",
    "mean_abs_dev",
    "median_abs_dev",
    "cv",
    "entropy",
    "sum_sq",
    "bending_energy",
    "zero_crossings",
    "mean_crossings",
    "local_maxima",
    "local_minima",
    "max_abs",
    "argmax_pos",
    "argmin_pos",
    "autocorr_lag1",
    "autocorr_lag2",
    "total_variation",
    "norm_total_variation",
    "spectral_centroid",
    "spectral_flatness",
];

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sign_changes(v: &[f64], level: f64) -> usize {
    let n = v.len();
    (0..n).filter(|&i| (v[i] >= level) != (v[(i + 1) % n] >= level)).count()
}

fn autocorr(v: &[f64], mean: f64, lag: usize) -> f64 {
    let n = v.len();
    let denom: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    if denom == 0.0 {
        return 0.0;
    }
    let num: f64 = (0..n).map(|i| (v[i] - mean) * (v[(i + lag) % n] - mean)).sum();
    num / denom
}

fn histogram_entropy(v: &[f64], lo: f64, hi: f64) -> f64 {
    let range = hi - lo;
    if !(range > 0.0) {
        return 0.0;
    }
    let mut counts = [0usize; ENTROPY_BINS];
    for &x in v {
        let b = (((x - lo) / range) * ENTROPY_BINS as f64) as usize;
        counts[b.min(ENTROPY_BINS - 1)] += 1;
    }
    let n = v.len() as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

/// Magnitude spectrum for frequency bins `0..=n/2`.
fn magnitude_spectrum(v: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf[..=v.len() / 2].iter().map(|c| c.norm()).collect()
}

/// The 32 summary statistics, named `<prefix>_stat_<metric>`.
pub fn stats_features(raw: &[f64], prefix: &str) -> Result<FeatureVector> {
    let values = stats_values(raw)?;
    let names = STAT_NAMES.iter().map(|m| format!("{prefix}_stat_{m}")).collect();
    Ok(FeatureVector::new(names, values.to_vec()))
}

pub fn stats_values(raw: &[f64]) -> Result<[f64; 32]> {
    let n = raw.len();
    if n < MIN_LEN {
        return Err(Error::TooShort { len: n, min: MIN_LEN });
    }
    let nf = n as f64;
    let mean = raw.iter().sum::<f64>() / nf;
    let m2 = raw.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    let m3 = raw.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / nf;
    let m4 = raw.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    let std = m2.sqrt();
    let (skew, kurt) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };

    let mut sorted = raw.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[n - 1]);
    let median = quantile(&sorted, 0.5);
    let q25 = quantile(&sorted, 0.25);
    let q75 = quantile(&sorted, 0.75);

    let sum_sq: f64 = raw.iter().map(|x| x * x).sum();
    let mean_sq = sum_sq / nf;
    let mad_mean = raw.iter().map(|x| (x - mean).abs()).sum::<f64>() / nf;
    let mut abs_dev: Vec<f64> = raw.iter().map(|x| (x - median).abs()).collect();
    abs_dev.sort_by(f64::total_cmp);
    let mad_median = quantile(&abs_dev, 0.5);
    let cv = if mean == 0.0 { 0.0 } else { std / mean.abs() };

    let local_max = (0..n)
        .filter(|&i| raw[i] > raw[(i + n - 1) % n] && raw[i] >= raw[(i + 1) % n])
        .count();
    let local_min = (0..n)
        .filter(|&i| raw[i] < raw[(i + n - 1) % n] && raw[i] <= raw[(i + 1) % n])
        .count();
    let argmax = raw
        .iter()
        .enumerate()
        .fold(0, |b, (i, &x)| if x > raw[b] { i } else { b });
    let argmin = raw
        .iter()
        .enumerate()
        .fold(0, |b, (i, &x)| if x < raw[b] { i } else { b });
    let tv: f64 = (0..n).map(|i| (raw[(i + 1) % n] - raw[i]).abs()).sum();
    let range = max - min;
    let norm_tv = if range > 0.0 { tv / (nf * range) } else { 0.0 };

    let spec = magnitude_spectrum(raw);
    let spec_sum: f64 = spec.iter().sum();
    let centroid = if spec_sum > 0.0 {
        spec.iter().enumerate().map(|(k, m)| k as f64 * m).sum::<f64>() / (spec_sum * nf)
    } else {
        0.0
    };
    // flatness of the power spectrum, DC excluded
    const EPS: f64 = 1e-12;
    let power: Vec<f64> = spec[1..].iter().map(|m| m * m + EPS).collect();
    let k = power.len() as f64;
    let geo = (power.iter().map(|p| p.ln()).sum::<f64>() / k).exp();
    let flatness = geo / (power.iter().sum::<f64>() / k);

    Ok([
        mean,
        std,
        m2,
        min,
        max,
        range,
        median,
        q25,
        q75,
        q75 - q25,
        skew,
        kurt,
        mean_sq.sqrt(),
        mad_mean,
        mad_median,
        cv,
        histogram_entropy(raw, min, max),
        sum_sq,
        mean_sq,
        sign_changes(raw, 0.0) as f64,
        sign_changes(raw, mean) as f64,
        local_max as f64,
        local_min as f64,
        min.abs().max(max.abs()),
        argmax as f64 / nf,
        argmin as f64 / nf,
        autocorr(raw, mean, 1),
        autocorr(raw, mean, 2),
        tv,
        norm_tv,
        centroid,
        flatness,
    ])
}
