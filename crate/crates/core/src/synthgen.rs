//! Synthetic noisy contours for the five shape classes.
//!
//! A contour is a polar curve `r(θ)` for its class, multiplied by smooth
//! radial noise `1 + Σ εₘ cos(mθ + φₘ)` over harmonics
//! `noise_harmonics..=3·noise_harmonics`, sampled at 150 to 250 angles,
//! jittered per point, rotated uniformly and scaled to an area factor in
//! `[0.5, 2]`. Contour `i` draws everything from its own random stream
//! `(seed, i)`, so output does not depend on thread count.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour_io::{Contour, ShapeClass};
use crate::error::{Error, Result};
use crate::geometry;
use crate::rng;
use crate::Point;

pub const MIN_POINTS: usize = 150;
pub const MAX_POINTS: usize = 250;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.hi > self.lo {
            rng.gen_range(self.lo..self.hi)
        } else {
            self.lo
        }
    }

    fn valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassParams {
    /// Minor/major axis ratio of class 1.
    pub ellipse_ratio: Range,
    /// Spindle taper τ in `r·(1 − τ sin²θ)`.
    pub spindle_taper: Range,
    pub teardrop_p: Range,
    pub teardrop_q: Range,
    /// Exponent `e` of the pole term `q·cos^{2e}(θ/2)`.
    pub teardrop_pole_exponent: u32,
    pub triangle_t: Range,
    /// Odd exponents applied to `cos 3θ`, picked uniformly.
    pub triangle_sharpness: Vec<u32>,
    pub multipolar_lobes: (u32, u32),
    /// Harmonics of the secondary lobe terms, picked without replacement
    /// from this inclusive range (the primary lobe count excluded).
    pub multipolar_secondary: (u32, u32),
    pub multipolar_terms: (u32, u32),
    pub multipolar_amp: Range,
}

impl Default for ClassParams {
    fn default() -> Self {
        ClassParams {
            ellipse_ratio: Range::new(0.25, 0.7),
            spindle_taper: Range::new(0.0, 0.3),
            teardrop_p: Range::new(0.25, 0.55),
            teardrop_q: Range::new(0.1, 0.35),
            teardrop_pole_exponent: 1,
            triangle_t: Range::new(0.18, 0.35),
            triangle_sharpness: vec![1, 3],
            multipolar_lobes: (4, 7),
            multipolar_secondary: (3, 7),
            multipolar_terms: (2, 3),
            multipolar_amp: Range::new(0.12, 0.3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub n_per_class: usize,
    pub seed: u64,
    /// Bound on `Σ|εₘ|`, as a fraction of the radius.
    pub noise_amplitude: f64,
    pub noise_harmonics: u32,
    /// Per-coordinate jitter bound, as a fraction of the mean radius.
    pub jitter: f64,
    pub class_params: ClassParams,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_per_class: 2000,
            seed: 42,
            noise_amplitude: 0.06,
            noise_harmonics: 8,
            jitter: 0.01,
            class_params: ClassParams::default(),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        let p = &self.class_params;
        if self.n_per_class == 0 {
            return bad("n_per_class must be at least 1");
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude < 1.0) {
            return bad("noise_amplitude must be in [0, 1)");
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return bad("jitter must be a non-negative number");
        }
        if self.noise_harmonics == 0 {
            return bad("noise_harmonics must be at least 1");
        }
        for (name, r) in [
            ("ellipse_ratio", p.ellipse_ratio),
            ("spindle_taper", p.spindle_taper),
            ("teardrop_p", p.teardrop_p),
            ("teardrop_q", p.teardrop_q),
            ("triangle_t", p.triangle_t),
            ("multipolar_amp", p.multipolar_amp),
        ] {
            if !r.valid() || r.lo < 0.0 {
                return Err(Error::InvalidConfig(format!("{name}: invalid range {r:?}")));
            }
        }
        if p.ellipse_ratio.lo <= 0.0 || p.ellipse_ratio.hi > 1.0 {
            return bad("ellipse_ratio must lie in (0, 1]");
        }
        if p.spindle_taper.hi >= 1.0 {
            return bad("spindle_taper must be below 1");
        }
        if p.teardrop_pole_exponent == 0 {
            return bad("teardrop_pole_exponent must be at least 1");
        }
        if p.triangle_sharpness.is_empty() || p.triangle_sharpness.iter().any(|e| e % 2 == 0) {
            return bad("triangle_sharpness needs at least one odd exponent");
        }
        let (k0, k1) = p.multipolar_lobes;
        let (s0, s1) = p.multipolar_secondary;
        let (t0, t1) = p.multipolar_terms;
        if k0 < 2 || k0 > k1 || s0 < 1 || s0 > s1 || t0 < 1 || t0 > t1 {
            return bad("multipolar integer ranges must be non-empty (lobes >= 2)");
        }
        if (s1 - s0 + 1) < t1 {
            return bad("multipolar_secondary has too few harmonics for multipolar_terms");
        }
        Ok(())
    }
}

/// Noise-free parameters of one base shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ShapeParams {
    Circle,
    Ellipse {
        ratio: f64,
        taper: f64,
    },
    Teardrop {
        p: f64,
        q: f64,
        exponent: u32,
    },
    Triangle {
        t: f64,
        sharpness: u32,
    },
    /// `(harmonic, amplitude, phase)` terms.
    Multipolar {
        terms: Vec<(u32, f64, f64)>,
    },
}

impl ShapeParams {
    pub fn class(&self) -> ShapeClass {
        match self {
            ShapeParams::Circle => ShapeClass::Circular,
            ShapeParams::Ellipse { .. } => ShapeClass::Elliptical,
            ShapeParams::Teardrop { .. } => ShapeClass::Teardrop,
            ShapeParams::Triangle { .. } => ShapeClass::Triangular,
            ShapeParams::Multipolar { .. } => ShapeClass::Multipolar,
        }
    }

    /// Polar radius of the base curve.
    pub fn radius(&self, theta: f64) -> f64 {
        match *self {
            ShapeParams::Circle => 1.0,
            ShapeParams::Ellipse { ratio, taper } => {
                let (s, c) = theta.sin_cos();
                ratio / ((ratio * c).powi(2) + s * s).sqrt() * (1.0 - taper * s * s)
            }
            ShapeParams::Teardrop { p, q, exponent } => {
                1.0 + p * theta.cos() + q * (theta / 2.0).cos().powi(2 * exponent as i32)
            }
            ShapeParams::Triangle { t, sharpness } => 1.0 + t * (3.0 * theta).cos().powi(sharpness as i32),
            ShapeParams::Multipolar { ref terms } => {
                1.0 + terms
                    .iter()
                    .map(|&(k, a, phi)| a * (f64::from(k) * theta + phi).cos())
                    .sum::<f64>()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            ShapeParams::Circle => true,
            ShapeParams::Ellipse { ratio, taper } => *ratio > 0.0 && *ratio <= 1.0 && (0.0..1.0).contains(taper),
            ShapeParams::Teardrop { p, q, exponent } => *p >= 0.0 && *q >= 0.0 && *exponent >= 1,
            ShapeParams::Triangle { t, sharpness } => *t >= 0.0 && sharpness % 2 == 1,
            ShapeParams::Multipolar { terms } => terms.iter().all(|&(k, a, _)| k >= 1 && a >= 0.0),
        };
        let min_r = (0..720)
            .map(|i| self.radius(TAU * i as f64 / 720.0))
            .fold(f64::INFINITY, f64::min);
        if ok && min_r > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "{self:?} does not give a positive radius"
            )))
        }
    }

    pub fn sample(class: ShapeClass, p: &ClassParams, rng: &mut impl Rng) -> ShapeParams {
        match class {
            ShapeClass::Circular => ShapeParams::Circle,
            ShapeClass::Elliptical => ShapeParams::Ellipse {
                ratio: p.ellipse_ratio.sample(rng),
                taper: p.spindle_taper.sample(rng),
            },
            ShapeClass::Teardrop => ShapeParams::Teardrop {
                p: p.teardrop_p.sample(rng),
                q: p.teardrop_q.sample(rng),
                exponent: p.teardrop_pole_exponent,
            },
            ShapeClass::Triangular => ShapeParams::Triangle {
                t: p.triangle_t.sample(rng),
                sharpness: p.triangle_sharpness[rng.gen_range(0..p.triangle_sharpness.len())],
            },
            ShapeClass::Multipolar => {
                let k = rng.gen_range(p.multipolar_lobes.0..=p.multipolar_lobes.1);
                let n_terms = rng.gen_range(p.multipolar_terms.0..=p.multipolar_terms.1);
                let mut pool: Vec<u32> = (p.multipolar_secondary.0..=p.multipolar_secondary.1)
                    .filter(|&h| h != k)
                    .collect();
                let mut terms = vec![(k, p.multipolar_amp.sample(rng), rng.gen_range(0.0..TAU))];
                for _ in 1..n_terms {
                    if pool.is_empty() {
                        break;
                    }
                    let h = pool.swap_remove(rng.gen_range(0..pool.len()));
                    terms.push((h, p.multipolar_amp.sample(rng), rng.gen_range(0.0..TAU)));
                }
                ShapeParams::Multipolar { terms }
            }
        }
    }
}

/// The noise-free base curve sampled at `n` angles, counter-clockwise.
pub fn base_shape(params: &ShapeParams, n: usize) -> Result<Contour> {
    params.validate()?;
    let pts = (0..n)
        .map(|i| {
            let th = TAU * i as f64 / n as f64;
            let r = params.radius(th);
            [r * th.cos(), r * th.sin()]
        })
        .collect();
    Contour::new(0, pts, Some(params.class()))
}

fn noisy_contour(cfg: &GenConfig, index: usize, class: ShapeClass) -> Result<Contour> {
    let mut rng = rng::substream(cfg.seed, index as u64);
    let params = ShapeParams::sample(class, &cfg.class_params, &mut rng);
    let n = rng.gen_range(MIN_POINTS..=MAX_POINTS);

    // εₘ ∝ u/m² with Σ|εₘ| ≤ noise_amplitude
    let h0 = cfg.noise_harmonics;
    let harmonics: Vec<u32> = (h0..=3 * h0).collect();
    let norm: f64 = harmonics.iter().map(|&m| 1.0 / f64::from(m * m)).sum();
    let noise: Vec<(f64, f64, f64)> = harmonics
        .iter()
        .map(|&m| {
            let u: f64 = rng.gen_range(-1.0..=1.0);
            let eps = cfg.noise_amplitude * u / (f64::from(m * m) * norm);
            (f64::from(m), eps, rng.gen_range(0.0..TAU))
        })
        .collect();

    let radii: Vec<f64> = (0..n)
        .map(|i| {
            let th = TAU * i as f64 / n as f64;
            let factor = 1.0 + noise.iter().map(|&(m, e, phi)| e * (m * th + phi).cos()).sum::<f64>();
            params.radius(th) * factor
        })
        .collect();
    let mean_r = radii.iter().sum::<f64>() / n as f64;
    let j = cfg.jitter * mean_r;
    let mut pts: Vec<Point> = radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let th = TAU * i as f64 / n as f64;
            let dx = if j > 0.0 { rng.gen_range(-j..=j) } else { 0.0 };
            let dy = if j > 0.0 { rng.gen_range(-j..=j) } else { 0.0 };
            [r * th.cos() + dx, r * th.sin() + dy]
        })
        .collect();
    geometry::rotate(&mut pts, rng.gen_range(0.0..TAU));
    let area_factor: f64 = rng.gen_range(0.5..=2.0);
    geometry::scale(&mut pts, area_factor.sqrt());
    Contour::new(index as i64, pts, Some(class))
}

/// `5 · n_per_class` labeled contours, class-major, ids `0..`.
pub fn generate(cfg: &GenConfig) -> Result<Vec<Contour>> {
    cfg.validate()?;
    (0..ShapeClass::COUNT * cfg.n_per_class)
        .into_par_iter()
        .map(|i| {
            let class = ShapeClass::from_index(i / cfg.n_per_class).expect("class index");
            noisy_contour(cfg, i, class)
        })
        .collect()
}
