//! Synthetic test signals and noise.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::prior::RandomSeed;
use crate::wavelet::DyadicSignal;

const BLOCK_POSITIONS: [f64; 11] = [
    0.10, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81,
];
const BLOCK_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];

/// Donoho-Johnstone "blocks" sampled at `t = i / n`.
pub fn blocks(n: usize) -> Result<DyadicSignal> {
    let values = (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            BLOCK_POSITIONS
                .iter()
                .zip(BLOCK_HEIGHTS)
                .map(|(&p, h)| {
                    let s = if t > p {
                        1.0
                    } else if t < p {
                        -1.0
                    } else {
                        0.0
                    };
                    h * (1.0 + s) / 2.0
                })
                .sum()
        })
        .collect();
    DyadicSignal::from_1d(values)
}

/// Piecewise-smooth grayscale test image in `[0, 1]`: a shaded background,
/// an ellipse, a textured rectangle, a disk and a row of small squares.
pub fn phantom(side: usize) -> Result<DyadicSignal> {
    let n = side as f64;
    let mut values = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            let y = (r as f64 + 0.5) / n;
            let x = (c as f64 + 0.5) / n;
            let mut v = 0.15 + 0.2 * x + 0.05 * (3.0 * y).sin();
            let (ex, ey) = ((x - 0.38) / 0.26, (y - 0.42) / 0.18);
            if ex * ex + ey * ey <= 1.0 {
                v = 0.75 - 0.15 * (ex * ex + ey * ey);
            }
            if (0.58..=0.9).contains(&x) && (0.12..=0.45).contains(&y) {
                v = 0.45 + 0.1 * (12.0 * x).cos() * (9.0 * y).sin();
            }
            let (dx, dy) = (x - 0.72, y - 0.72);
            if dx * dx + dy * dy <= 0.14 * 0.14 {
                v = 0.9;
            }
            if (0.78..=0.86).contains(&y) {
                for s in 0..5 {
                    let x0 = 0.08 + s as f64 * 0.09;
                    if (x0..=x0 + 0.05).contains(&x) {
                        v = if s % 2 == 0 { 0.05 } else { 0.6 };
                    }
                }
            }
            values.push(v.clamp(0.0, 1.0));
        }
    }
    DyadicSignal::from_2d(side, values)
}

/// How the standard deviation of synthetic noise is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    /// `sd(signal) / sigma` equals the given ratio.
    Snr(f64),
    /// `sigma` is this percentage of the largest absolute sample.
    Percent(f64),
    Sigma(f64),
}

impl NoiseLevel {
    pub fn sigma(&self, signal: &DyadicSignal) -> Result<f64> {
        let s = match *self {
            NoiseLevel::Snr(r) => {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(Error::param(format!("snr = {r} must be > 0")));
                }
                sample_sd(signal.values()) / r
            }
            NoiseLevel::Percent(p) => {
                if !(p >= 0.0 && p.is_finite()) {
                    return Err(Error::param(format!("noise percentage = {p} must be >= 0")));
                }
                let peak = signal.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                p / 100.0 * peak
            }
            NoiseLevel::Sigma(s) => s,
        };
        if s >= 0.0 && s.is_finite() {
            Ok(s)
        } else {
            Err(Error::param(format!("noise sd = {s} must be >= 0")))
        }
    }
}

/// Population standard deviation.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// `signal + sigma * N(0, 1)` with a reproducible stream.
pub fn add_noise(signal: &DyadicSignal, sigma: f64, seed: RandomSeed) -> DyadicSignal {
    let mut rng = seed.rng();
    signal.map(|v| v + sigma * sample_normal(&mut rng))
}

fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
