//! Wavelet denoising and deconvolution under random tree Besov priors.
//!
//! A signal on a dyadic grid is expanded in an orthonormal periodic wavelet
//! basis ([`wavelet`]); its detail coefficients form a binary tree (1D) or a
//! quadtree (2D) ([`tree`]). The prior ([`prior`]) keeps a random subtree of
//! nodes and draws p-exponential coefficients on it. [`prune`] computes the
//! exact MAP subtree for noisy coefficients, with fixed or data-driven
//! level-wise densities.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod io;
pub mod prior;
pub mod prune;
pub mod quality;
pub mod restore;
pub mod testdata;
pub mod tree;
pub mod wavelet;

pub use error::{Error, Result};
