//! Exact MAP tree pruning of a noisy wavelet pyramid.
//!
//! Every node `(j, k)` contributes `-log z_jk` to the posterior cost: a data
//! term (`included` or `excluded`, summed over bands) plus, for `j >= 1`, a
//! tree term `-w log beta_j` or `-w log(1 - beta_j)` and, when `beta` is
//! estimated, a hyperprior term `-w a log(1/2 - beta_j)`. `w` is the penalty
//! multiplicity (1 in 1D, the band count in 2D by default). The root node and
//! the scaling block are always kept.
//!
//! The bottom-up recursion keeps two numbers per node: the optimised weight
//! `F` of the subtree when the node is kept and the weight `P` of pruning the
//! whole branch, both excluding the node's own tree term. Their difference
//! `D = P - F` is the log-odds at which keeping the node starts to pay off:
//! a node is kept iff `D >= w log((1 - beta)/beta)`.

mod engine;
pub mod oracle;
mod scaling;
mod select;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{BranchStats, TreeMask};
use crate::wavelet::Pyramid;

pub use engine::{
    auto_prune, auto_prune_gaussian, auto_prune_laplace, prune_fixed_beta, prune_fixed_beta_with,
};
pub use oracle::{brute_force_map, brute_force_map_with, posterior_cost, OracleMode};
pub use scaling::{beta_with_exponent, reduce_to_unit, scaling_exponent};
pub use select::{first_descent_index, level_beta_select, Candidate, LevelSelection};

/// Base prior on the coefficients of kept nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaseDensity {
    /// `g ~ N(0, kappa^2)`, penalty `g^2 / (2 kappa^2)`.
    Gaussian { kappa: f64 },
    /// `g ~ Laplace(0, kappa)`, penalty `|g| / kappa`.
    Laplace { kappa: f64 },
}

impl BaseDensity {
    /// Unit-variance Gaussian base prior.
    pub fn gaussian() -> Self {
        BaseDensity::Gaussian { kappa: 1.0 }
    }

    pub fn laplace(kappa: f64) -> Self {
        BaseDensity::Laplace { kappa }
    }

    pub fn kappa(&self) -> f64 {
        match *self {
            BaseDensity::Gaussian { kappa } | BaseDensity::Laplace { kappa } => kappa,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.kappa();
        if k > 0.0 && k.is_finite() {
            Ok(())
        } else {
            Err(Error::param(format!("kappa = {k} must be > 0")))
        }
    }
}

/// Hyperprior `pi(beta_j) ~ (1/2 - beta_j)^a` on `[0, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperprior {
    pub a: f64,
}

impl Hyperprior {
    pub fn new(a: f64) -> Result<Self> {
        if a >= 0.0 && a.is_finite() {
            Ok(Self { a })
        } else {
            Err(Error::param(format!(
                "hyperprior exponent a = {a} must be >= 0"
            )))
        }
    }
}

/// How the tree and hyperprior terms of a 2D node are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyMultiplicity {
    /// One term per band, so a 2D node pays three times.
    #[default]
    PerBand,
    /// One term per node regardless of bands.
    PerNode,
}

/// Likelihood plus base prior for one pruning run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruneModel {
    pub density: BaseDensity,
    /// Standard deviation of the white noise on every coefficient.
    pub noise_sd: f64,
    pub multiplicity: PenaltyMultiplicity,
}

impl PruneModel {
    pub fn new(density: BaseDensity) -> Self {
        Self {
            density,
            noise_sd: 1.0,
            multiplicity: PenaltyMultiplicity::PerBand,
        }
    }

    pub fn with_noise(mut self, noise_sd: f64) -> Self {
        self.noise_sd = noise_sd;
        self
    }

    pub fn with_multiplicity(mut self, multiplicity: PenaltyMultiplicity) -> Self {
        self.multiplicity = multiplicity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.density.validate()?;
        if self.noise_sd > 0.0 && self.noise_sd.is_finite() {
            Ok(())
        } else {
            Err(Error::param(format!(
                "noise sd = {} must be > 0",
                self.noise_sd
            )))
        }
    }

    pub(crate) fn penalty_weight(&self, bands: usize) -> f64 {
        match self.multiplicity {
            PenaltyMultiplicity::PerBand => bands as f64,
            PenaltyMultiplicity::PerNode => 1.0,
        }
    }

    /// `min_g -log z^1` for one coefficient.
    pub fn included_cost(&self, m: f64) -> f64 {
        let s2 = self.noise_sd * self.noise_sd;
        match self.density {
            BaseDensity::Gaussian { kappa } => m * m / (2.0 * (s2 + kappa * kappa)),
            BaseDensity::Laplace { kappa } => {
                if m.abs() <= s2 / kappa {
                    m * m / (2.0 * s2)
                } else {
                    m.abs() / kappa - s2 / (2.0 * kappa * kappa)
                }
            }
        }
    }

    /// `min_g -log z^0` for one coefficient (`g = 0`).
    pub fn excluded_cost(&self, m: f64) -> f64 {
        m * m / (2.0 * self.noise_sd * self.noise_sd)
    }

    /// Posterior mode of `g` on a kept node.
    pub fn map_coefficient(&self, m: f64) -> f64 {
        let s2 = self.noise_sd * self.noise_sd;
        match self.density {
            BaseDensity::Gaussian { kappa } => kappa * kappa * m / (kappa * kappa + s2),
            BaseDensity::Laplace { kappa } => soft_threshold(m, s2 / kappa),
        }
    }

    /// Coefficient reported on a kept node: the data itself under a Gaussian
    /// base prior (no shrinkage), the soft-thresholded value under Laplace.
    pub fn reported_coefficient(&self, m: f64) -> f64 {
        match self.density {
            BaseDensity::Gaussian { .. } => m,
            BaseDensity::Laplace { .. } => self.map_coefficient(m),
        }
    }
}

/// `sign(m) max(|m| - t, 0)`.
pub fn soft_threshold(m: f64, t: f64) -> f64 {
    if m > t {
        m - t
    } else if m < -t {
        m + t
    } else {
        0.0
    }
}

/// Per-level record of the beta selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDiagnostics {
    pub level: usize,
    pub grid_size: usize,
    pub chosen_index: usize,
    pub kept: usize,
}

/// Output of a pruning run.
#[derive(Debug, Clone)]
pub struct PruneResult {
    /// Effective mask `t~`.
    pub mask: TreeMask,
    /// Estimated coefficients; zero off the mask, scaling block passed through.
    pub coefficients: Pyramid,
    /// `beta_hat_j` for `j = 1..=J` when estimated from data.
    pub beta_hat: Option<Vec<f64>>,
    /// Posterior cost `sum -log z_jk` at the optimum, up to data-independent constants.
    pub total_cost: f64,
    pub levels: Vec<LevelDiagnostics>,
    /// Subtree energies, optimised weights `F` and gaps `D` (empty for the oracle).
    pub stats: BranchStats,
}

/// Serializable summary of a [`PruneResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub mask: TreeMask,
    pub beta_hat: Option<Vec<f64>>,
    pub total_cost: f64,
    pub levels: Vec<LevelDiagnostics>,
}

impl PruneResult {
    pub fn report(&self) -> PruneReport {
        PruneReport {
            mask: self.mask.clone(),
            beta_hat: self.beta_hat.clone(),
            total_cost: self.total_cost,
            levels: self.levels.clone(),
        }
    }
}

/// Build the coefficient pyramid for a final mask.
pub(crate) fn estimate_coefficients(
    pyramid: &Pyramid,
    mask: &TreeMask,
    model: &PruneModel,
) -> Pyramid {
    let mut out = pyramid.clone();
    for j in 0..=pyramid.depth() {
        let n = pyramid.nodes_at(j);
        for b in 0..pyramid.bands() {
            for i in 0..n {
                let v = if mask.get(j, i) {
                    model.reported_coefficient(pyramid.coeff(j, b, i))
                } else {
                    0.0
                };
                out.set_coeff(j, b, i, v);
            }
        }
    }
    out
}

/// Fixed-beta check: every entry in `(0, 1/2]`.
pub(crate) fn validate_fixed_betas(betas: &[f64]) -> Result<()> {
    match betas.iter().find(|b| !(**b > 0.0 && **b <= 0.5)) {
        Some(b) => Err(Error::param(format!(
            "fixed beta = {b} outside (0, 0.5]; larger values do not regularise"
        ))),
        None => Ok(()),
    }
}
