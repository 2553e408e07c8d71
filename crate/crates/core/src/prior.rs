//! Random tree Besov priors: Galton-Watson subtrees, p-exponential
//! coefficient draws and Besov norms in wavelet coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::tree::TreeMask;
use crate::wavelet::{inverse_dwt, DyadicSignal, Pyramid, WaveletBasis};

/// Wavelet density index, either shared by every level or given per level
/// `j = 1..=J`.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaSchedule {
    Scalar(f64),
    PerLevel(Vec<f64>),
}

impl BetaSchedule {
    /// Density used for nodes on `level >= 1`.
    pub fn at(&self, level: usize) -> f64 {
        match self {
            BetaSchedule::Scalar(b) => *b,
            BetaSchedule::PerLevel(v) => v[level - 1],
        }
    }

    /// Expand to one value per level `1..=depth`.
    pub fn expand(&self, depth: usize) -> Result<Vec<f64>> {
        match self {
            BetaSchedule::Scalar(b) => Ok(vec![*b; depth]),
            BetaSchedule::PerLevel(v) if v.len() == depth => Ok(v.clone()),
            BetaSchedule::PerLevel(v) => Err(Error::param(format!(
                "per-level beta has {} entries, expected {depth}",
                v.len()
            ))),
        }
    }
}

impl From<f64> for BetaSchedule {
    fn from(b: f64) -> Self {
        BetaSchedule::Scalar(b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorConfig {
    pub smoothness: f64,
    pub integrability: f64,
    pub scale: f64,
    pub beta: BetaSchedule,
    pub dim: usize,
    pub depth: usize,
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.integrability >= 1.0 && self.integrability.is_finite()) {
            return Err(Error::param(format!(
                "integrability p = {} must be >= 1",
                self.integrability
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::param(format!(
                "scale kappa = {} must be > 0",
                self.scale
            )));
        }
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::param(format!("unsupported dimension {}", self.dim)));
        }
        let betas = self.beta.expand(self.depth)?;
        if let Some(b) = betas.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::param(format!("beta = {b} outside [0, 1]")));
        }
        Ok(())
    }

    /// `gamma = d + log2(beta)` for a scalar density.
    pub fn gamma(&self) -> Option<f64> {
        match self.beta {
            BetaSchedule::Scalar(b) => Some(self.dim as f64 + b.log2()),
            BetaSchedule::PerLevel(_) => None,
        }
    }

    /// Level weight exponent `s + d/2 - d/p`.
    pub fn level_exponent(&self) -> f64 {
        let d = self.dim as f64;
        self.smoothness + d / 2.0 - d / self.integrability
    }
}

/// Explicit seed plus stream id; equal seeds give equal draw sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RandomSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RandomSeed {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Density proportional to `exp(-|x|^p / (2 kappa^p))`.
///
/// Drawn as `|X| = kappa (2G)^(1/p)` with `G ~ Gamma(1/p, 1)` and a fair sign:
/// Gaussian `N(0, kappa^2)` for `p = 2`, Laplace with scale `2 kappa` for `p = 1`.
#[derive(Debug, Clone, Copy)]
pub struct PExponential {
    p: f64,
    kappa: f64,
    gamma: Gamma<f64>,
}

impl PExponential {
    pub fn new(p: f64, kappa: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::param(format!("p = {p} must be >= 1")));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::param(format!("kappa = {kappa} must be > 0")));
        }
        let gamma = Gamma::new(1.0 / p, 1.0).map_err(|e| Error::param(e.to_string()))?;
        Ok(Self { p, kappa, gamma })
    }
}

impl Distribution<f64> for PExponential {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = self.gamma.sample(rng);
        let magnitude = self.kappa * (2.0 * g).powf(1.0 / self.p);
        if rng.random::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    }
}

/// One p-exponential draw.
pub fn sample_coefficient<R: Rng + ?Sized>(p: f64, kappa: f64, rng: &mut R) -> Result<f64> {
    Ok(PExponential::new(p, kappa)?.sample(rng))
}

fn draw_mask<R: Rng + ?Sized>(config: &PriorConfig, rng: &mut R) -> Result<TreeMask> {
    let betas = config.beta.expand(config.depth)?;
    let mut raw = TreeMask::root_only(config.dim, config.depth);
    for (j, &beta) in (1..=config.depth).zip(&betas) {
        for i in 0..raw.level(j).len() {
            let on = rng.random::<f64>() < beta;
            raw.set(j, i, on);
        }
    }
    // root bit is always on; project turns raw coin flips into t~
    debug_assert!(raw.get(0, 0));
    Ok(raw.project())
}

/// Galton-Watson subtree: root kept, each child kept with probability
/// `beta_j` given its parent. Returns the effective mask.
pub fn sample_subtree(config: &PriorConfig, seed: RandomSeed) -> Result<TreeMask> {
    config.validate()?;
    draw_mask(config, &mut seed.rng())
}

/// One draw of a random tree Besov function.
#[derive(Debug, Clone)]
pub struct PriorDraw {
    pub signal: DyadicSignal,
    pub pyramid: Pyramid,
    pub mask: TreeMask,
}

/// Sample coefficients `2^(-j(s + d/2 - d/p)) X` on the nodes of a random
/// subtree (zero elsewhere, scaling block zero) and synthesise the signal.
///
/// The mask consumes the stream first, so it equals [`sample_subtree`] for
/// the same seed.
pub fn sample_besov_function(
    config: &PriorConfig,
    basis: &WaveletBasis,
    seed: RandomSeed,
) -> Result<PriorDraw> {
    config.validate()?;
    if config.smoothness >= basis.regularity() as f64 {
        return Err(Error::param(format!(
            "smoothness s = {} must be below the basis regularity r = {}",
            config.smoothness,
            basis.regularity()
        )));
    }
    let mut rng = seed.rng();
    let mask = draw_mask(config, &mut rng)?;
    let dist = PExponential::new(config.integrability, config.scale)?;
    let exponent = config.level_exponent();
    let mut pyramid = Pyramid::zeros(config.dim, config.depth, basis.family())?;
    let bands = pyramid.bands();
    for j in 0..=config.depth {
        let weight = (-(j as f64) * exponent).exp2();
        let n = pyramid.nodes_at(j);
        for b in 0..bands {
            for i in 0..n {
                let x = dist.sample(&mut rng);
                if mask.get(j, i) {
                    pyramid.set_coeff(j, b, i, weight * x);
                }
            }
        }
    }
    let signal = inverse_dwt(&pyramid)?;
    Ok(PriorDraw {
        signal,
        pyramid,
        mask,
    })
}

/// `(sum_{j=-1}^{J} 2^(j p (s + d/2 - d/p)) ||f_j||_p^p)^(1/p)` with the
/// scaling block as level `-1`.
pub fn besov_norm(pyramid: &Pyramid, s: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p = {p} must be >= 1")));
    }
    let d = pyramid.dim() as f64;
    let exponent = s + d / 2.0 - d / p;
    let lp = |vals: &[f64]| vals.iter().map(|v| v.abs().powf(p)).sum::<f64>();
    let mut total = (-p * exponent).exp2() * lp(pyramid.scaling());
    for (j, level) in pyramid.details().iter().enumerate() {
        total += (j as f64 * p * exponent).exp2() * lp(level);
    }
    Ok(total.powf(1.0 / p))
}

/// Inclusion probability of a fixed node on `level`: `prod_{j' <= level} beta_j'`.
pub fn inclusion_probability(beta: &BetaSchedule, level: usize) -> f64 {
    (1..=level).map(|j| beta.at(j)).product()
}
