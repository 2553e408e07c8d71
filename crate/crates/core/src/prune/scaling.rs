//! Reduction of a Gaussian `(sigma, kappa)` problem to the unit one.
//!
//! A mask `A` costs `data(A) + const + |A| lambda` with
//! `lambda = log((1 - beta)/beta)`. Under `N(0, sigma^2)` noise and a
//! `N(0, kappa^2)` base prior the data part is `1/c` times the unit one,
//! `c = sigma^2 (kappa^2 + sigma^2) / (2 kappa^2)`, so the optimal mask is the
//! unit-problem mask at log-odds `c lambda`.

use super::select::{beta_of, log_odds};
use crate::error::{Error, Result};

/// `c = sigma^2 (kappa^2 + sigma^2) / (2 kappa^2)`.
pub fn scaling_exponent(sigma: f64, kappa: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("sigma = {sigma} must be > 0")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::param(format!("kappa = {kappa} must be > 0")));
    }
    let (s2, k2) = (sigma * sigma, kappa * kappa);
    Ok(s2 * (k2 + s2) / (2.0 * k2))
}

/// `beta^e / (beta^e + (1 - beta)^e)`, evaluated as `1 / (1 + e^{e lambda})`.
pub fn beta_with_exponent(beta: f64, exponent: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 0.5) {
        return Err(Error::param(format!("beta = {beta} outside (0, 0.5]")));
    }
    if !(exponent > 0.0 && exponent.is_finite()) {
        return Err(Error::param(format!("exponent = {exponent} must be > 0")));
    }
    Ok(beta_of(exponent * log_odds(beta)))
}

/// The unit-variance density whose fixed-beta mask matches the `(sigma, kappa)` one.
pub fn reduce_to_unit(beta: f64, sigma: f64, kappa: f64) -> Result<f64> {
    let c = scaling_exponent(sigma, kappa)?;
    beta_with_exponent(beta, c)
}
