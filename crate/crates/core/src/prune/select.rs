//! Level-wise choice of `beta` from the data-determined candidate grid.
//!
//! Everything is parametrised by the log-odds `lambda = log((1 - beta)/beta)`
//! so that grid points generated by large gaps do not underflow.

use super::Hyperprior;

/// Offset of the clamped candidate below `beta = 1/2` when `a = 0`.
pub const HALF_CLAMP: f64 = 1e-12;

/// `log(1 + e^x)` without overflow; `softplus(inf) = inf`, `softplus(-inf) = 0`.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `beta = 1 / (1 + e^lambda)`.
pub(crate) fn beta_of(lambda: f64) -> f64 {
    if lambda >= 0.0 {
        let e = (-lambda).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + lambda.exp())
    }
}

/// `lambda = log((1 - beta)/beta)`.
pub(crate) fn log_odds(beta: f64) -> f64 {
    (-beta).ln_1p() - beta.ln()
}

/// `-log(1/2 - beta)` written in `lambda`; `1/2 - beta = tanh(lambda/2)/2`.
pub(crate) fn neg_log_half_gap(lambda: f64) -> f64 {
    if lambda == f64::INFINITY {
        return std::f64::consts::LN_2;
    }
    let log_tanh = if lambda > 1.0 {
        (-2.0 / (lambda.exp() + 1.0)).ln_1p()
    } else {
        (lambda / 2.0).tanh().ln()
    };
    std::f64::consts::LN_2 - log_tanh
}

/// One point of the candidate grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub beta: f64,
    /// `log((1 - beta)/beta)`; infinite for the empty selection.
    pub log_odds: f64,
    /// Nodes with `gap >= threshold` (and `gap > 0`) are kept.
    pub threshold: f64,
    pub kept: usize,
    /// `B = L + R` at this candidate.
    pub cost: f64,
}

/// Result of [`level_beta_select`].
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSelection {
    pub beta: f64,
    pub log_odds: f64,
    pub included: Vec<bool>,
    /// Grid sorted by increasing `beta`; `candidates[0]` is `beta = 0`.
    pub candidates: Vec<Candidate>,
    pub chosen: usize,
}

/// Choose `beta_hat` for one level.
///
/// `kept[i]` and `pruned[i]` are the subtree weights of node `i` when it is
/// kept or pruned, without the node's own tree term. `weight` is the penalty
/// multiplicity per node. The grid is `{0}` plus `1/(1 + e^{D_i/weight})`
/// for every positive gap `D_i = pruned[i] - kept[i]`; when `a = 0` and some
/// gap is non-positive a point `1/2 - 1e-12` is added. Ties go to the
/// smaller `beta`.
pub fn level_beta_select(
    kept: &[f64],
    pruned: &[f64],
    weight: f64,
    hyper: Hyperprior,
) -> LevelSelection {
    assert_eq!(kept.len(), pruned.len(), "kept/pruned length mismatch");
    let n = kept.len();
    let gaps: Vec<f64> = pruned.iter().zip(kept).map(|(p, k)| p - k).collect();
    let total_pruned: f64 = pruned.iter().sum();
    let nf = n as f64;

    let mut order: Vec<usize> = (0..n).filter(|&i| gaps[i] > 0.0).collect();
    order.sort_by(|&x, &y| gaps[y].total_cmp(&gaps[x]).then(x.cmp(&y)));

    let cost = |lambda: f64, kept_count: usize, gain: f64| -> f64 {
        let tree = if kept_count == 0 {
            0.0
        } else {
            kept_count as f64 * lambda
        };
        let hyper_term = if hyper.a == 0.0 {
            0.0
        } else {
            nf * hyper.a * neg_log_half_gap(lambda)
        };
        total_pruned - gain + weight * (tree + nf * softplus(-lambda) + hyper_term)
    };

    let mut candidates = vec![Candidate {
        beta: 0.0,
        log_odds: f64::INFINITY,
        threshold: f64::INFINITY,
        kept: 0,
        cost: cost(f64::INFINITY, 0, 0.0),
    }];

    let mut gain = 0.0;
    let mut idx = 0;
    while idx < order.len() {
        let d = gaps[order[idx]];
        while idx < order.len() && gaps[order[idx]] == d {
            gain += d;
            idx += 1;
        }
        let lambda = d / weight;
        candidates.push(Candidate {
            beta: beta_of(lambda),
            log_odds: lambda,
            threshold: d,
            kept: idx,
            cost: cost(lambda, idx, gain),
        });
    }

    if hyper.a == 0.0 && order.len() < n {
        let lambda = log_odds(0.5 - HALF_CLAMP);
        let threshold = weight * lambda;
        let members: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| gaps[i] >= threshold)
            .collect();
        let g: f64 = members.iter().map(|&i| gaps[i]).sum();
        let c = Candidate {
            beta: 0.5 - HALF_CLAMP,
            log_odds: lambda,
            threshold,
            kept: members.len(),
            cost: cost(lambda, members.len(), g),
        };
        let pos = candidates
            .iter()
            .position(|x| x.log_odds < lambda)
            .unwrap_or(candidates.len());
        candidates.insert(pos, c);
    }

    let mut chosen = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.cost < candidates[chosen].cost {
            chosen = i;
        }
    }
    let best = candidates[chosen];
    let included = gaps
        .iter()
        .map(|&d| d > 0.0 && d >= best.threshold)
        .collect();
    LevelSelection {
        beta: best.beta,
        log_odds: best.log_odds,
        included,
        candidates,
        chosen,
    }
}

/// Index picked by scanning the grid in increasing `beta` and stopping at
/// the first rise `B_(k+1) > B_(k)`.
pub fn first_descent_index(costs: &[f64]) -> usize {
    (0..costs.len().saturating_sub(1))
        .find(|&k| costs[k + 1] > costs[k])
        .unwrap_or(costs.len().saturating_sub(1))
}
