use super::select::{beta_of, level_beta_select, log_odds, neg_log_half_gap, softplus};
use super::{
    estimate_coefficients, validate_fixed_betas, BaseDensity, Hyperprior, LevelDiagnostics,
    PruneModel, PruneResult,
};
use crate::error::Result;
use crate::prior::BetaSchedule;
use crate::tree::{child_slots, subtree_energies, TreeMask};
use crate::wavelet::Pyramid;

enum Mode<'a> {
    Fixed(&'a [f64]),
    Auto(Hyperprior),
}

/// Fixed-beta MAP pruning with unit noise.
pub fn prune_fixed_beta(
    pyramid: &Pyramid,
    beta: &BetaSchedule,
    density: BaseDensity,
) -> Result<PruneResult> {
    prune_fixed_beta_with(pyramid, beta, &PruneModel::new(density))
}

/// Fixed-beta MAP pruning under an explicit noise level and penalty count.
pub fn prune_fixed_beta_with(
    pyramid: &Pyramid,
    beta: &BetaSchedule,
    model: &PruneModel,
) -> Result<PruneResult> {
    model.validate()?;
    let betas = beta.expand(pyramid.depth())?;
    validate_fixed_betas(&betas)?;
    Ok(run(pyramid, model, Mode::Fixed(&betas)))
}

/// Automatic level-wise beta with a unit Gaussian base prior.
pub fn auto_prune_gaussian(pyramid: &Pyramid, hyper: Hyperprior) -> Result<PruneResult> {
    auto_prune(pyramid, hyper, &PruneModel::new(BaseDensity::gaussian()))
}

/// Automatic level-wise beta with a Laplace(0, kappa) base prior.
pub fn auto_prune_laplace(pyramid: &Pyramid, hyper: Hyperprior, kappa: f64) -> Result<PruneResult> {
    auto_prune(
        pyramid,
        hyper,
        &PruneModel::new(BaseDensity::laplace(kappa)),
    )
}

/// Automatic level-wise beta for any model.
pub fn auto_prune(pyramid: &Pyramid, hyper: Hyperprior, model: &PruneModel) -> Result<PruneResult> {
    model.validate()?;
    Hyperprior::new(hyper.a)?;
    Ok(run(pyramid, model, Mode::Auto(hyper)))
}

fn run(pyramid: &Pyramid, model: &PruneModel, mode: Mode<'_>) -> PruneResult {
    let depth = pyramid.depth();
    let dim = pyramid.dim();
    let w = model.penalty_weight(pyramid.bands());

    let mut keep_w: Vec<Vec<f64>> = vec![Vec::new(); depth + 1];
    let mut prune_w: Vec<Vec<f64>> = vec![Vec::new(); depth + 1];
    let mut raw: Vec<Vec<bool>> = vec![Vec::new(); depth + 1];
    let mut lambdas = vec![0.0; depth + 1];
    let mut levels = Vec::with_capacity(depth);

    for j in (0..=depth).rev() {
        let n = pyramid.nodes_at(j);
        let mut f = Vec::with_capacity(n);
        let mut p = Vec::with_capacity(n);
        for i in 0..n {
            let mut fi = 0.0;
            let mut pi = 0.0;
            for m in pyramid.node_coeffs(j, i) {
                fi += model.included_cost(m);
                pi += model.excluded_cost(m);
            }
            if j < depth {
                let lam = lambdas[j + 1];
                let off = w * softplus(-lam);
                let on = w * softplus(lam);
                for c in child_slots(dim, j, i).iter() {
                    let pruned = prune_w[j + 1][c] + off;
                    pi += pruned;
                    fi += if raw[j + 1][c] {
                        keep_w[j + 1][c] + on
                    } else {
                        pruned
                    };
                }
            }
            f.push(fi);
            p.push(pi);
        }

        if j == 0 {
            raw[0] = vec![true];
        } else {
            match mode {
                Mode::Fixed(betas) => {
                    let lam = log_odds(betas[j - 1]);
                    let keep: Vec<bool> = f
                        .iter()
                        .zip(&p)
                        .map(|(fi, pi)| {
                            let d = pi - fi;
                            d > 0.0 && d >= w * lam
                        })
                        .collect();
                    levels.push(LevelDiagnostics {
                        level: j,
                        grid_size: 1,
                        chosen_index: 0,
                        kept: keep.iter().filter(|x| **x).count(),
                    });
                    lambdas[j] = lam;
                    raw[j] = keep;
                }
                Mode::Auto(hyper) => {
                    let sel = level_beta_select(&f, &p, w, hyper);
                    levels.push(LevelDiagnostics {
                        level: j,
                        grid_size: sel.candidates.len(),
                        chosen_index: sel.chosen,
                        kept: sel.included.iter().filter(|x| **x).count(),
                    });
                    lambdas[j] = sel.log_odds;
                    raw[j] = sel.included;
                }
            }
        }
        keep_w[j] = f;
        prune_w[j] = p;
    }
    levels.reverse();

    let mut total_cost = keep_w[0][0];
    let beta_hat = match mode {
        Mode::Fixed(_) => None,
        Mode::Auto(hyper) => {
            if hyper.a != 0.0 {
                for j in 1..=depth {
                    let n = pyramid.nodes_at(j) as f64;
                    total_cost += w * n * hyper.a * neg_log_half_gap(lambdas[j]);
                }
            }
            Some((1..=depth).map(|j| beta_of(lambdas[j])).collect())
        }
    };

    let mut mask = TreeMask::empty(dim, depth);
    for (j, bits) in raw.iter().enumerate() {
        for (i, &b) in bits.iter().enumerate() {
            mask.set(j, i, b);
        }
    }
    let mask = mask.project();
    let coefficients = estimate_coefficients(pyramid, &mask, model);

    let mut stats = subtree_energies(pyramid);
    stats.gap = keep_w
        .iter()
        .zip(&prune_w)
        .map(|(f, p)| p.iter().zip(f).map(|(pi, fi)| pi - fi).collect())
        .collect();
    stats.weight = keep_w;

    PruneResult {
        mask,
        coefficients,
        beta_hat,
        total_cost,
        levels,
        stats,
    }
}
