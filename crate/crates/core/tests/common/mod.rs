#![allow(dead_code)]

use besov_tree::wavelet::{Pyramid, WaveletFamily};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Noise plus sparse, tree-clustered signal, so that every level has a mix
/// of large and small coefficients.
pub fn random_pyramid(rng: &mut ChaCha8Rng, dim: usize, depth: usize) -> Pyramid {
    let mut p = Pyramid::zeros(dim, depth, WaveletFamily::Haar).unwrap();
    let amp = [0.0, 1.5, 3.0, 5.0][rng.random_range(0..4)];
    for v in p.scaling_mut() {
        *v = 10.0 * normal(rng);
    }
    for j in 0..=depth {
        for b in 0..p.bands() {
            for k in 0..p.nodes_at(j) {
                let mut m = normal(rng);
                if rng.random_bool(0.4) {
                    m += amp * normal(rng) * (1.0 + (depth - j) as f64 * 0.5);
                }
                p.set_coeff(j, b, k, m);
            }
        }
    }
    p
}
