//! Beta sweeps and the method comparison table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::BetaSchedule;
use crate::prune::{BaseDensity, Hyperprior, PenaltyMultiplicity};
use crate::quality::{rel_error, MetricsReport};
use crate::restore::{
    denoise, estimate_noise_sd, reference_score, threshold_baselines, DenoiseConfig, NoiseHandling,
    PruneMode, ThresholdKind,
};
use crate::wavelet::{forward_dwt, DyadicSignal, WaveletBasis};

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && count >= 1) {
        return Err(Error::param(format!(
            "log grid needs 0 < lo <= hi and count >= 1 (lo={lo}, hi={hi}, count={count})"
        )));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

/// Default sweep: 25 log-spaced points on `[1e-6, 0.49]` refined towards 1/2.
pub fn default_beta_grid() -> Vec<f64> {
    let mut g = log_grid(1e-6, 0.49, 25).expect("valid grid");
    g.extend_from_slice(&[0.492, 0.494, 0.496, 0.498, 0.499, 0.4995]);
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub beta: f64,
    /// SSIM for images, `-rel_error` for 1D signals.
    pub score: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub metric: String,
    pub points: Vec<SweepPoint>,
    pub best_beta: f64,
    pub best_index: usize,
}

/// Fixed-beta denoising at every grid point; the best score wins, earliest on ties.
pub fn sweep_beta(
    noisy: &DyadicSignal,
    reference: &DyadicSignal,
    template: &DenoiseConfig,
    betas: &[f64],
) -> Result<SweepReport> {
    if betas.is_empty() {
        return Err(Error::param("empty beta grid"));
    }
    let mut points: Vec<SweepPoint> = Vec::with_capacity(betas.len());
    let mut best_index = 0;
    for (i, &beta) in betas.iter().enumerate() {
        let mut cfg = template.clone();
        cfg.mode = PruneMode::Fixed(BetaSchedule::Scalar(beta));
        let (rec, _) = denoise(noisy, &cfg)?;
        let point = SweepPoint {
            beta,
            score: reference_score(&rec, reference)?,
            rel_error: rel_error(&rec, reference)?,
        };
        if i > 0 && point.score > points[best_index].score {
            best_index = i;
        }
        points.push(point);
    }
    Ok(SweepReport {
        metric: if noisy.dim() == 2 {
            "ssim"
        } else {
            "neg_rel_error"
        }
        .to_string(),
        best_beta: points[best_index].beta,
        best_index,
        points,
    })
}

/// Settings shared by every row of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub basis: WaveletBasis,
    pub scale: f64,
    pub noise: NoiseHandling,
    pub multiplicity: PenaltyMultiplicity,
    pub a_gaussian: f64,
    pub a_laplace: f64,
    pub kappa_laplace: f64,
    pub betas: Vec<f64>,
    /// Thresholds for the baselines, in units of the estimated noise sd.
    pub threshold_multiples: Vec<f64>,
}

impl BenchmarkConfig {
    /// Image defaults: Daubechies-2, input scale `250 / delta`, Laplace kappa 0.11.
    pub fn image(noise_pct: f64) -> Result<Self> {
        Ok(Self {
            basis: WaveletBasis::db2(),
            scale: crate::restore::default_image_scale(noise_pct)?,
            noise: NoiseHandling::AssumeUnit,
            multiplicity: PenaltyMultiplicity::PerBand,
            a_gaussian: 100.0,
            a_laplace: 10.0,
            kappa_laplace: 0.11,
            betas: default_beta_grid(),
            threshold_multiples: (0..=60).map(|i| i as f64 * 0.1).collect(),
        })
    }

    /// Signal defaults: Haar, estimated noise, Laplace kappa 1.
    pub fn signal() -> Self {
        Self {
            basis: WaveletBasis::haar(),
            scale: 1.0,
            noise: NoiseHandling::Estimate,
            multiplicity: PenaltyMultiplicity::PerBand,
            a_gaussian: 100.0,
            a_laplace: 10.0,
            kappa_laplace: 1.0,
            betas: default_beta_grid(),
            threshold_multiples: (0..=60).map(|i| i as f64 * 0.1).collect(),
        }
    }

    fn denoiser(&self, density: BaseDensity, mode: PruneMode) -> DenoiseConfig {
        let mut c = DenoiseConfig::new(self.basis.clone(), density, mode)
            .with_scale(self.scale)
            .with_noise(self.noise);
        c.multiplicity = self.multiplicity;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub method: String,
    /// Selected fixed beta, or the threshold for the baselines.
    pub parameter: Option<f64>,
    pub metrics: MetricsReport,
}

/// Noisy input plus six methods, each tuned or estimated as labelled.
pub fn run_benchmark(
    clean: &DyadicSignal,
    noisy: &DyadicSignal,
    config: &BenchmarkConfig,
) -> Result<Vec<BenchmarkRow>> {
    if !clean.same_shape(noisy) {
        return Err(Error::dim("reference and noisy input differ in shape"));
    }
    let mut rows = vec![BenchmarkRow {
        method: "noisy".into(),
        parameter: None,
        metrics: MetricsReport::evaluate(noisy, clean)?,
    }];

    let gauss = BaseDensity::gaussian();
    let laplace = BaseDensity::laplace(config.kappa_laplace);
    for (label, density, a) in [
        ("gaussian", gauss, config.a_gaussian),
        ("laplace", laplace, config.a_laplace),
    ] {
        let template = config.denoiser(density, PruneMode::Fixed(BetaSchedule::Scalar(0.5)));
        let sweep = sweep_beta(noisy, clean, &template, &config.betas)?;
        let mut cfg = template.clone();
        cfg.mode = PruneMode::Fixed(BetaSchedule::Scalar(sweep.best_beta));
        let (rec, _) = denoise(noisy, &cfg)?;
        rows.push(BenchmarkRow {
            method: format!("fixed-beta {label}"),
            parameter: Some(sweep.best_beta),
            metrics: MetricsReport::evaluate(&rec, clean)?,
        });

        let cfg = config.denoiser(density, PruneMode::Auto(Hyperprior::new(a)?));
        let (rec, result) = denoise(noisy, &cfg)?;
        let mut metrics = MetricsReport::evaluate(&rec, clean)?;
        metrics.beta_hat = result.beta_hat;
        rows.push(BenchmarkRow {
            method: format!("auto {label}"),
            parameter: None,
            metrics,
        });
    }
    let pyramid = forward_dwt(noisy, &config.basis)?;
    let sd = estimate_noise_sd(&pyramid);
    let thresholds: Vec<f64> = config.threshold_multiples.iter().map(|m| m * sd).collect();
    for (label, kind) in [
        ("soft threshold", ThresholdKind::Soft),
        ("hard threshold", ThresholdKind::Hard),
    ] {
        let choice = threshold_baselines(&pyramid, kind, &thresholds, clean)?;
        rows.push(BenchmarkRow {
            method: label.into(),
            parameter: Some(choice.threshold),
            metrics: MetricsReport::evaluate(&choice.signal, clean)?,
        });
    }
    Ok(rows)
}

/// Aligned text rendering of benchmark rows.
pub fn format_table(rows: &[BenchmarkRow]) -> String {
    let fmt = |v: Option<f64>, digits: usize| match v {
        Some(x) if x.is_finite() => format!("{x:.digits$}"),
        Some(_) => "inf".to_string(),
        None => "-".to_string(),
    };
    let mut out = format!(
        "{:<20} {:>10} {:>8} {:>10} {:>12}\n",
        "method", "SNR (dB)", "SSIM", "rel.err", "parameter"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<20} {:>10} {:>8} {:>10} {:>12}\n",
            r.method,
            fmt(Some(r.metrics.snr_db), 2),
            fmt(r.metrics.ssim, 4),
            fmt(Some(r.metrics.rel_error), 5),
            r.parameter.map_or("-".to_string(), |p| format!("{p:.4e}")),
        ));
    }
    out
}
