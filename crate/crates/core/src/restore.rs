//! Denoising and plug-and-play deconvolution built on tree pruning.

use crate::error::{Error, Result};
use crate::prior::BetaSchedule;
use crate::prune::{
    auto_prune, prune_fixed_beta_with, soft_threshold, BaseDensity, Hyperprior,
    PenaltyMultiplicity, PruneModel, PruneResult,
};
use crate::quality::{rel_error, ssim, SsimParams};
use crate::wavelet::{forward_dwt, inverse_dwt, DyadicSignal, Pyramid, WaveletBasis};

/// MAD of the finest-level detail coefficients (all bands) divided by 0.6745.
pub fn estimate_noise_sd(pyramid: &Pyramid) -> f64 {
    let mut v: Vec<f64> = pyramid
        .level(pyramid.depth())
        .iter()
        .map(|x| x.abs())
        .collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let med = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    med / 0.6745
}

#[derive(Debug, Clone, PartialEq)]
pub enum PruneMode {
    Fixed(BetaSchedule),
    Auto(Hyperprior),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseHandling {
    /// Coefficients are taken to carry unit-variance noise.
    AssumeUnit,
    /// Estimate `sigma` from the finest level and work in units of `sigma`.
    Estimate,
    Known(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseConfig {
    pub basis: WaveletBasis,
    pub density: BaseDensity,
    pub mode: PruneMode,
    /// Input multiplier applied before the transform and undone after.
    pub scale: f64,
    pub noise: NoiseHandling,
    pub multiplicity: PenaltyMultiplicity,
}

impl DenoiseConfig {
    pub fn new(basis: WaveletBasis, density: BaseDensity, mode: PruneMode) -> Self {
        Self {
            basis,
            density,
            mode,
            scale: 1.0,
            noise: NoiseHandling::AssumeUnit,
            multiplicity: PenaltyMultiplicity::PerBand,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_noise(mut self, noise: NoiseHandling) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::param(format!("scale = {} must be > 0", self.scale)));
        }
        if let NoiseHandling::Known(s) = self.noise {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::param(format!("noise sd = {s} must be > 0")));
            }
        }
        self.density.validate()
    }
}

/// 2D input scale heuristic `250 / delta` for a noise percentage `delta`.
pub fn default_image_scale(noise_pct: f64) -> Result<f64> {
    if noise_pct > 0.0 && noise_pct.is_finite() {
        Ok(250.0 / noise_pct)
    } else {
        Err(Error::param(format!(
            "noise percentage = {noise_pct} must be > 0"
        )))
    }
}

/// Prune a coefficient pyramid according to `config` (scale not applied).
pub fn prune_pyramid(pyramid: &Pyramid, config: &DenoiseConfig) -> Result<PruneResult> {
    let sigma = match config.noise {
        NoiseHandling::AssumeUnit => 1.0,
        NoiseHandling::Known(s) => s,
        NoiseHandling::Estimate => {
            let s = estimate_noise_sd(pyramid);
            if s > 0.0 {
                s
            } else {
                1.0
            }
        }
    };
    let model = PruneModel::new(config.density).with_multiplicity(config.multiplicity);
    let work = if sigma == 1.0 {
        pyramid.clone()
    } else {
        pyramid.scaled(1.0 / sigma)
    };
    let mut result = match &config.mode {
        PruneMode::Fixed(b) => prune_fixed_beta_with(&work, b, &model)?,
        PruneMode::Auto(h) => auto_prune(&work, *h, &model)?,
    };
    if sigma != 1.0 {
        result.coefficients = result.coefficients.scaled(sigma);
        // the scaling block is passed through untouched
        result
            .coefficients
            .scaling_mut()
            .copy_from_slice(pyramid.scaling());
    }
    Ok(result)
}

/// Scale, transform, prune, invert, unscale.
pub fn denoise(
    signal: &DyadicSignal,
    config: &DenoiseConfig,
) -> Result<(DyadicSignal, PruneResult)> {
    config.validate()?;
    let scaled = if config.scale == 1.0 {
        signal.clone()
    } else {
        signal.map(|v| v * config.scale)
    };
    let pyramid = forward_dwt(&scaled, &config.basis)?;
    let result = prune_pyramid(&pyramid, config)?;
    let rec = inverse_dwt(&result.coefficients)?;
    let rec = if config.scale == 1.0 {
        rec
    } else {
        rec.map(|v| v / config.scale)
    };
    Ok((rec, result))
}

/// Circular 1D convolution with an odd-length kernel centred on its middle tap.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvOp {
    kernel: Vec<f64>,
}

impl ConvOp {
    pub fn new(kernel: Vec<f64>) -> Result<Self> {
        if kernel.len().is_multiple_of(2) {
            return Err(Error::param(format!(
                "kernel length {} must be odd",
                kernel.len()
            )));
        }
        if kernel.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("kernel entries must be finite"));
        }
        if kernel.iter().all(|v| *v == 0.0) {
            return Err(Error::param("kernel must be nonzero"));
        }
        Ok(Self { kernel })
    }

    pub fn identity() -> Self {
        Self { kernel: vec![1.0] }
    }

    /// Sampled Gaussian of standard deviation `sd` (in samples), unit sum.
    pub fn gaussian(sd: f64, radius: usize) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::param(format!("blur sd = {sd} must be > 0")));
        }
        let k: Vec<f64> = (0..=2 * radius)
            .map(|i| {
                let x = i as f64 - radius as f64;
                (-x * x / (2.0 * sd * sd)).exp()
            })
            .collect();
        let s: f64 = k.iter().sum();
        Self::new(k.into_iter().map(|v| v / s).collect())
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    fn check(&self, x: &DyadicSignal) -> Result<()> {
        if x.dim() == 1 {
            Ok(())
        } else {
            Err(Error::dim("convolution operates on 1D signals"))
        }
    }

    /// Squared operator norm on signals of length `len`: the largest
    /// `|K(w)|^2` over the DFT frequencies, since the operator is circulant.
    pub fn norm_squared(&self, len: usize) -> Result<f64> {
        if len == 0 {
            return Err(Error::dim("empty signal"));
        }
        let c = (self.kernel.len() / 2) as f64;
        let mut best = 0.0f64;
        for f in 0..len {
            let w = 2.0 * std::f64::consts::PI * f as f64 / len as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (t, k) in self.kernel.iter().enumerate() {
                let phase = w * (t as f64 - c);
                re += k * phase.cos();
                im -= k * phase.sin();
            }
            best = best.max(re * re + im * im);
        }
        Ok(best)
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `y_i = sum_t k_t x_{i - (t - c)}` with periodic indexing.
pub fn convolve(x: &DyadicSignal, op: &ConvOp) -> Result<DyadicSignal> {
    op.check(x)?;
    let n = x.len() as isize;
    let c = (op.kernel.len() / 2) as isize;
    let xv = x.values();
    let out = (0..n)
        .map(|i| {
            op.kernel
                .iter()
                .enumerate()
                .map(|(t, k)| k * xv[(i - (t as isize - c)).rem_euclid(n) as usize])
                .sum()
        })
        .collect();
    x.with_values(out)
}

/// Adjoint of [`convolve`] (circular correlation).
pub fn adjoint(y: &DyadicSignal, op: &ConvOp) -> Result<DyadicSignal> {
    op.check(y)?;
    let n = y.len() as isize;
    let c = (op.kernel.len() / 2) as isize;
    let yv = y.values();
    let out = (0..n)
        .map(|i| {
            op.kernel
                .iter()
                .enumerate()
                .map(|(t, k)| k * yv[(i + (t as isize - c)).rem_euclid(n) as usize])
                .sum()
        })
        .collect();
    y.with_values(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PnPConfig {
    /// Gradient step; `None` means `1 / ||A||^2`.
    pub tau: Option<f64>,
    pub iterations: usize,
    pub tolerance: f64,
    pub denoiser: DenoiseConfig,
}

impl PnPConfig {
    pub fn new(denoiser: DenoiseConfig) -> Self {
        Self {
            tau: None,
            iterations: 50,
            tolerance: 1e-4,
            denoiser,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PnPOutcome {
    pub signal: DyadicSignal,
    pub iterations: usize,
    pub converged: bool,
    pub tau: f64,
    /// Diagnostics of the last denoising step.
    pub last: Option<PruneResult>,
}

/// `f <- Denoise(f - tau A^T (A f - m))` from `f = 0`.
pub fn pnp_deconvolve(m: &DyadicSignal, op: &ConvOp, config: &PnPConfig) -> Result<PnPOutcome> {
    pnp_deconvolve_observed(m, op, config, |_, _| {})
}

/// As [`pnp_deconvolve`], calling `observe(t, f_t)` after every step.
pub fn pnp_deconvolve_observed(
    m: &DyadicSignal,
    op: &ConvOp,
    config: &PnPConfig,
    mut observe: impl FnMut(usize, &DyadicSignal),
) -> Result<PnPOutcome> {
    op.check(m)?;
    config.denoiser.validate()?;
    if config.iterations == 0 {
        return Err(Error::param("iteration count must be positive"));
    }
    if config.tolerance.is_nan() || config.tolerance < 0.0 {
        return Err(Error::param("tolerance must be >= 0"));
    }
    let norm2 = op.norm_squared(m.len())?;
    let tau = config.tau.unwrap_or(1.0 / norm2);
    if !(tau > 0.0 && tau * norm2 < 2.0) {
        return Err(Error::param(format!(
            "step tau = {tau} violates tau ||A||^2 < 2 (||A||^2 = {norm2:.6})"
        )));
    }
    let limit = 1e3 * l2(m.values());
    let mut f = m.map(|_| 0.0);
    let mut last = None;
    let mut converged = false;
    let mut done = 0;
    for t in 1..=config.iterations {
        let resid = convolve(&f, op)?;
        let resid = resid.with_values(
            resid
                .values()
                .iter()
                .zip(m.values())
                .map(|(a, b)| a - b)
                .collect(),
        )?;
        let grad = adjoint(&resid, op)?;
        let step = f.with_values(
            f.values()
                .iter()
                .zip(grad.values())
                .map(|(a, g)| a - tau * g)
                .collect(),
        )?;
        let (next, result) = denoise(&step, &config.denoiser)?;
        let norm = l2(next.values());
        if norm > limit && norm > 0.0 {
            return Err(Error::Divergence {
                iteration: t,
                norm,
                limit,
            });
        }
        let change = l2(&next
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>());
        let prev = l2(f.values());
        f = next;
        last = Some(result);
        done = t;
        observe(t, &f);
        if change == 0.0 || (prev > 0.0 && change / prev < config.tolerance) {
            converged = true;
            break;
        }
    }
    Ok(PnPOutcome {
        signal: f,
        iterations: done,
        converged,
        tau,
        last,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    Soft,
    Hard,
}

/// Threshold every detail coefficient; the scaling block is kept.
pub fn threshold_pyramid(pyramid: &Pyramid, kind: ThresholdKind, t: f64) -> Pyramid {
    match kind {
        ThresholdKind::Soft => pyramid.map_details(|m| soft_threshold(m, t)),
        ThresholdKind::Hard => pyramid.map_details(|m| if m.abs() > t { m } else { 0.0 }),
    }
}

/// Outcome of a threshold sweep.
#[derive(Debug, Clone)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub score: f64,
    pub signal: DyadicSignal,
}

/// Score used to rank reconstructions: SSIM for images, `-rel_error` for 1D.
pub fn reference_score(est: &DyadicSignal, reference: &DyadicSignal) -> Result<f64> {
    if est.dim() == 2 {
        ssim(est, reference, &SsimParams::default())
    } else {
        Ok(-rel_error(est, reference)?)
    }
}

/// Try every threshold and keep the best against `reference` (first on ties).
pub fn threshold_baselines(
    pyramid: &Pyramid,
    kind: ThresholdKind,
    thresholds: &[f64],
    reference: &DyadicSignal,
) -> Result<ThresholdChoice> {
    let mut best: Option<ThresholdChoice> = None;
    for &t in thresholds {
        if t.is_nan() || t < 0.0 {
            return Err(Error::param(format!("threshold {t} must be >= 0")));
        }
        let signal = inverse_dwt(&threshold_pyramid(pyramid, kind, t))?;
        let score = reference_score(&signal, reference)?;
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(ThresholdChoice {
                threshold: t,
                score,
                signal,
            });
        }
    }
    best.ok_or_else(|| Error::param("empty threshold sweep"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::RandomSeed;
    use crate::testdata::{add_noise, blocks};
    use crate::wavelet::WaveletFamily;

    fn haar_fixed(beta: f64) -> DenoiseConfig {
        DenoiseConfig::new(
            WaveletBasis::haar(),
            BaseDensity::gaussian(),
            PruneMode::Fixed(BetaSchedule::Scalar(beta)),
        )
    }

    #[test]
    fn noise_estimate_on_pure_noise() {
        let x = add_noise(
            &DyadicSignal::zeros(1, 11).unwrap(),
            0.7,
            RandomSeed::new(1),
        );
        let p = forward_dwt(&x, &WaveletBasis::db2()).unwrap();
        assert!((estimate_noise_sd(&p) - 0.7).abs() < 0.05);
    }

    #[test]
    fn single_atom_is_a_fixed_point() {
        let mut p = Pyramid::zeros(1, 5, WaveletFamily::Haar).unwrap();
        p.set_coeff(5, 0, 17, 40.0);
        let x = inverse_dwt(&p).unwrap();
        let cfg = DenoiseConfig::new(
            WaveletBasis::haar(),
            BaseDensity::gaussian(),
            PruneMode::Auto(Hyperprior { a: 0.0 }),
        );
        let (y, r) = denoise(&x, &cfg).unwrap();
        for (a, b) in x.values().iter().zip(y.values()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(r.mask.count(), 6);
    }

    #[test]
    fn strong_hyperprior_removes_pure_noise() {
        let x = add_noise(&DyadicSignal::zeros(1, 9).unwrap(), 1.0, RandomSeed::new(2));
        let cfg = DenoiseConfig::new(
            WaveletBasis::haar(),
            BaseDensity::gaussian(),
            PruneMode::Auto(Hyperprior { a: 100.0 }),
        );
        let (_, r) = denoise(&x, &cfg).unwrap();
        let p = forward_dwt(&x, &WaveletBasis::haar()).unwrap();
        let kept: f64 = r
            .coefficients
            .details()
            .iter()
            .flatten()
            .map(|v| v * v)
            .sum();
        let all: f64 = p.details().iter().flatten().map(|v| v * v).sum();
        assert!(kept / all < 0.05, "{}", kept / all);
    }

    #[test]
    fn fixed_gaussian_denoise_is_idempotent() {
        let b = blocks(512).unwrap();
        let x = add_noise(&b, 0.4, RandomSeed::new(5)).map(|v| v / 0.4);
        let cfg = haar_fixed(0.05);
        let (y, r1) = denoise(&x, &cfg).unwrap();
        let (_, r2) = denoise(&y, &cfg).unwrap();
        assert_eq!(r1.mask, r2.mask);
    }

    #[test]
    fn estimate_mode_rescales() {
        let b = blocks(1024).unwrap();
        let x = add_noise(&b, 0.3, RandomSeed::new(6));
        let cfg = DenoiseConfig::new(
            WaveletBasis::haar(),
            BaseDensity::gaussian(),
            PruneMode::Auto(Hyperprior { a: 100.0 }),
        )
        .with_noise(NoiseHandling::Estimate);
        let (y, _) = denoise(&x, &cfg).unwrap();
        assert!(rel_error(&y, &b).unwrap() < rel_error(&x, &b).unwrap());
    }

    #[test]
    fn convolution_examples() {
        let x = blocks(64).unwrap();
        assert_eq!(convolve(&x, &ConvOp::identity()).unwrap(), x);
        let c = x.map(|_| 2.5);
        let avg = ConvOp::new(vec![0.25, 0.5, 0.25]).unwrap();
        for v in convolve(&c, &avg).unwrap().values() {
            assert!((v - 2.5).abs() < 1e-15);
        }
        assert!(ConvOp::new(vec![1.0, 1.0]).is_err());
        assert!(ConvOp::new(vec![0.0]).is_err());
    }

    #[test]
    fn adjoint_identity() {
        let mut rng = RandomSeed::new(9).rng();
        for _ in 0..100 {
            let k: Vec<f64> = (0..7)
                .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
                .collect();
            let op = ConvOp::new(k).unwrap();
            let x: Vec<f64> = (0..32)
                .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
                .collect();
            let y: Vec<f64> = (0..32)
                .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
                .collect();
            let (x, y) = (
                DyadicSignal::from_1d(x).unwrap(),
                DyadicSignal::from_1d(y).unwrap(),
            );
            let ax = convolve(&x, &op).unwrap();
            let aty = adjoint(&y, &op).unwrap();
            let l: f64 = ax.values().iter().zip(y.values()).map(|(a, b)| a * b).sum();
            let r: f64 = x
                .values()
                .iter()
                .zip(aty.values())
                .map(|(a, b)| a * b)
                .sum();
            assert!((l - r).abs() < 1e-10);
        }
    }

    #[test]
    fn operator_norm_of_averaging_kernel() {
        // |K(w)| peaks at w = 0 with the kernel sum
        let op = ConvOp::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert!((op.norm_squared(64).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pnp_with_delta_kernel_is_denoise() {
        let b = blocks(256).unwrap();
        let x = add_noise(&b, 0.3, RandomSeed::new(7)).map(|v| v / 0.3);
        let mut cfg = PnPConfig::new(haar_fixed(0.1));
        cfg.iterations = 1;
        cfg.tau = Some(1.0);
        let out = pnp_deconvolve(&x, &ConvOp::identity(), &cfg).unwrap();
        let (d, _) = denoise(&x, &cfg.denoiser).unwrap();
        assert_eq!(out.signal, d);
    }

    #[test]
    fn pnp_zero_measurement() {
        let z = DyadicSignal::zeros(1, 6).unwrap();
        let cfg = PnPConfig::new(haar_fixed(0.1));
        let out = pnp_deconvolve(&z, &ConvOp::gaussian(1.5, 4).unwrap(), &cfg).unwrap();
        assert!(out.signal.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn pnp_rejects_unstable_step() {
        let z = blocks(64).unwrap();
        let mut cfg = PnPConfig::new(haar_fixed(0.1));
        cfg.tau = Some(2.5);
        assert!(pnp_deconvolve(&z, &ConvOp::identity(), &cfg).is_err());
    }

    #[test]
    fn threshold_examples() {
        let b = blocks(128).unwrap();
        let p = forward_dwt(&b, &WaveletBasis::db2()).unwrap();
        let id = inverse_dwt(&threshold_pyramid(&p, ThresholdKind::Soft, 0.0)).unwrap();
        assert!(rel_error(&id, &b).unwrap() < 1e-12);
        let flat = threshold_pyramid(&p, ThresholdKind::Hard, f64::INFINITY);
        assert!(flat.details().iter().flatten().all(|v| *v == 0.0));
        assert_eq!(flat.scaling(), p.scaling());
        let mut q = Pyramid::zeros(1, 1, WaveletFamily::Haar).unwrap();
        q.set_coeff(1, 0, 0, 2.5);
        assert_eq!(
            threshold_pyramid(&q, ThresholdKind::Soft, 1.0).coeff(1, 0, 0),
            1.5
        );
        let c = threshold_baselines(&p, ThresholdKind::Hard, &[0.0, 1.0], &b).unwrap();
        assert_eq!(c.threshold, 0.0);
    }
}
