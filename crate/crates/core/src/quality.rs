//! Reconstruction quality metrics.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::wavelet::DyadicSignal;

fn check_shapes(est: &DyadicSignal, reference: &DyadicSignal) -> Result<()> {
    if est.same_shape(reference) {
        Ok(())
    } else {
        Err(Error::dim(format!(
            "shape mismatch: {}D depth {} vs {}D depth {}",
            est.dim(),
            est.depth(),
            reference.dim(),
            reference.depth()
        )))
    }
}

/// `||est - ref||_2 / ||ref||_2`.
pub fn rel_error(est: &DyadicSignal, reference: &DyadicSignal) -> Result<f64> {
    check_shapes(est, reference)?;
    let norm: f64 = reference.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroReference);
    }
    let diff: f64 = est
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(diff / norm)
}

/// `-20 log10(rel_error)`; `+inf` for an exact reconstruction.
pub fn snr_db(est: &DyadicSignal, reference: &DyadicSignal) -> Result<f64> {
    Ok(snr_from_rel(rel_error(est, reference)?))
}

pub fn snr_from_rel(rel: f64) -> f64 {
    -20.0 * rel.log10()
}

/// SSIM constants and window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let w: Vec<f64> = (0..size)
        .map(|i| {
            let x = i as f64 - c;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable filtering over the valid region only.
fn filter_valid(img: &[f64], side: usize, w: &[f64]) -> Vec<f64> {
    let out_side = side + 1 - w.len();
    let mut rows = vec![0.0; side * out_side];
    for r in 0..side {
        for c in 0..out_side {
            rows[r * out_side + c] = w
                .iter()
                .enumerate()
                .map(|(t, wt)| wt * img[r * side + c + t])
                .sum();
        }
    }
    let mut out = vec![0.0; out_side * out_side];
    for r in 0..out_side {
        for c in 0..out_side {
            out[r * out_side + c] = w
                .iter()
                .enumerate()
                .map(|(t, wt)| wt * rows[(r + t) * out_side + c])
                .sum();
        }
    }
    out
}

/// Mean SSIM over every valid window position of a 2D image pair.
pub fn ssim(est: &DyadicSignal, reference: &DyadicSignal, params: &SsimParams) -> Result<f64> {
    check_shapes(est, reference)?;
    if est.dim() != 2 {
        return Err(Error::dim("SSIM needs 2D images"));
    }
    let side = est.side();
    if params.window == 0 || params.window > side || params.window.is_multiple_of(2) {
        return Err(Error::param(format!(
            "SSIM window {} must be odd and at most the image side {side}",
            params.window
        )));
    }
    let w = gaussian_window(params.window, params.sigma);
    let (x, y) = (est.values(), reference.values());
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let mx = filter_valid(x, side, &w);
    let my = filter_valid(y, side, &w);
    let sxx = filter_valid(&xx, side, &w);
    let syy = filter_valid(&yy, side, &w);
    let sxy = filter_valid(&xy, side, &w);
    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);
    let n = mx.len();
    let mut total = 0.0;
    for i in 0..n {
        let (ux, uy) = (mx[i], my[i]);
        let vx = sxx[i] - ux * ux;
        let vy = syy[i] - uy * uy;
        let cov = sxy[i] - ux * uy;
        total +=
            ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    Ok(total / n as f64)
}

/// Metrics of one reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `null` in JSON when the reconstruction is exact.
    #[serde(with = "inf_as_null")]
    pub snr_db: f64,
    /// 2D only.
    pub ssim: Option<f64>,
    pub rel_error: f64,
    pub beta_hat: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime_ms: Option<f64>,
}

impl MetricsReport {
    /// Relative error and SNR, plus SSIM for images.
    pub fn evaluate(est: &DyadicSignal, reference: &DyadicSignal) -> Result<Self> {
        let rel = rel_error(est, reference)?;
        let ssim = if est.dim() == 2 {
            Some(ssim(est, reference, &SsimParams::default())?)
        } else {
            None
        };
        Ok(Self {
            snr_db: snr_from_rel(rel),
            ssim,
            rel_error: rel,
            beta_hat: None,
            runtime_ms: None,
        })
    }
}

mod inf_as_null {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
