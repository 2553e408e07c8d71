//! Exhaustive MAP search over small trees, used to check the recursion.
//!
//! Costs here are evaluated with plain `ln` of the densities, independently
//! of the log-odds arithmetic in the main recursion.

use super::select::HALF_CLAMP;
use super::{
    estimate_coefficients, validate_fixed_betas, BaseDensity, Hyperprior, LevelDiagnostics,
    PruneModel, PruneResult,
};
use crate::error::{Error, Result};
use crate::prior::BetaSchedule;
use crate::tree::{child_slots, parent_slot, BranchStats, TreeMask};
use crate::wavelet::Pyramid;

/// Largest tree (root included) the fixed-beta search enumerates.
pub const MAX_FIXED_NODES: usize = 22;

/// Relative cost difference below which two grid points count as tied.
const TIE_TOL: f64 = 1e-10;

/// Gaps this close to zero are treated as zero when building grids.
const GAP_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleMode {
    Fixed(BetaSchedule),
    Auto(Hyperprior),
}

/// `sum -log z_jk` for an effective mask at given per-level `beta`.
///
/// Nodes off the mask pay `-log(1 - beta_j)`; the hyperprior term is added
/// for every node on levels `1..=J` when `hyper` is given.
pub fn posterior_cost(
    pyramid: &Pyramid,
    model: &PruneModel,
    mask: &TreeMask,
    betas: &[f64],
    hyper: Option<Hyperprior>,
) -> Result<f64> {
    if mask.dim() != pyramid.dim() || mask.depth() != pyramid.depth() {
        return Err(Error::dim("mask and pyramid shapes differ"));
    }
    if betas.len() != pyramid.depth() {
        return Err(Error::param(format!(
            "{} betas for depth {}",
            betas.len(),
            pyramid.depth()
        )));
    }
    let w = model.penalty_weight(pyramid.bands());
    let mut total = 0.0;
    for j in 0..=pyramid.depth() {
        for i in 0..pyramid.nodes_at(j) {
            let on = mask.get(j, i);
            for m in pyramid.node_coeffs(j, i) {
                total += if on {
                    model.included_cost(m)
                } else {
                    model.excluded_cost(m)
                };
            }
            if j == 0 {
                continue;
            }
            let b = betas[j - 1];
            total += w * if on { -b.ln() } else { -(1.0 - b).ln() };
            if let Some(h) = hyper {
                if h.a != 0.0 {
                    total += -w * h.a * (0.5 - b).ln();
                }
            }
        }
    }
    Ok(total)
}

/// Exhaustive MAP estimate under a unit-noise model with `density`.
pub fn brute_force_map(
    pyramid: &Pyramid,
    density: BaseDensity,
    mode: &OracleMode,
) -> Result<PruneResult> {
    brute_force_map_with(pyramid, &PruneModel::new(density), mode)
}

/// Exhaustive MAP estimate for any model.
pub fn brute_force_map_with(
    pyramid: &Pyramid,
    model: &PruneModel,
    mode: &OracleMode,
) -> Result<PruneResult> {
    model.validate()?;
    let layout = Layout::new(pyramid, model);
    match mode {
        OracleMode::Fixed(schedule) => {
            let betas = schedule.expand(pyramid.depth())?;
            validate_fixed_betas(&betas)?;
            if layout.len() > MAX_FIXED_NODES {
                return Err(Error::Capacity(format!(
                    "{} nodes exceed the fixed-beta limit of {MAX_FIXED_NODES}",
                    layout.len()
                )));
            }
            Ok(layout.fixed(pyramid, model, &betas))
        }
        OracleMode::Auto(hyper) => {
            Hyperprior::new(hyper.a)?;
            let fits = match pyramid.dim() {
                1 => pyramid.depth() <= 4,
                _ => pyramid.depth() <= 2,
            };
            if !fits {
                return Err(Error::Capacity(format!(
                    "automatic search supports depth <= 4 (1D) or <= 2 (2D), got {} in {}D",
                    pyramid.depth(),
                    pyramid.dim()
                )));
            }
            Ok(layout.auto(pyramid, model, *hyper))
        }
    }
}

struct Layout {
    dim: usize,
    depth: usize,
    weight: f64,
    offset: Vec<usize>,
    level_of: Vec<usize>,
    parent: Vec<usize>,
    inc: Vec<f64>,
    exc: Vec<f64>,
}

impl Layout {
    fn new(pyramid: &Pyramid, model: &PruneModel) -> Self {
        let (dim, depth) = (pyramid.dim(), pyramid.depth());
        let mut offset = Vec::with_capacity(depth + 2);
        let mut level_of = Vec::new();
        let mut parent = Vec::new();
        let mut inc = Vec::new();
        let mut exc = Vec::new();
        for j in 0..=depth {
            offset.push(level_of.len());
            for i in 0..pyramid.nodes_at(j) {
                level_of.push(j);
                parent.push(if j == 0 {
                    usize::MAX
                } else {
                    offset[j - 1] + parent_slot(dim, j, i)
                });
                inc.push(
                    pyramid
                        .node_coeffs(j, i)
                        .map(|m| model.included_cost(m))
                        .sum(),
                );
                exc.push(
                    pyramid
                        .node_coeffs(j, i)
                        .map(|m| model.excluded_cost(m))
                        .sum(),
                );
            }
        }
        offset.push(level_of.len());
        Self {
            dim,
            depth,
            weight: model.penalty_weight(pyramid.bands()),
            offset,
            level_of,
            parent,
            inc,
            exc,
        }
    }

    fn len(&self) -> usize {
        self.level_of.len()
    }

    fn nodes_at(&self, j: usize) -> usize {
        self.offset[j + 1] - self.offset[j]
    }

    fn to_mask(&self, bits: u64) -> TreeMask {
        let mut mask = TreeMask::empty(self.dim, self.depth);
        for b in 0..self.len() {
            if bits >> b & 1 == 1 {
                mask.set(self.level_of[b], b - self.offset[self.level_of[b]], true);
            }
        }
        mask
    }

    /// Penalties `(on, off)` for one node at density `beta`.
    fn penalties(&self, beta: f64) -> (f64, f64) {
        let on = if beta == 0.0 {
            f64::INFINITY
        } else {
            -self.weight * beta.ln()
        };
        (on, -self.weight * (1.0 - beta).ln())
    }

    fn fixed(&self, pyramid: &Pyramid, model: &PruneModel, betas: &[f64]) -> PruneResult {
        let n = self.len();
        let pen: Vec<(f64, f64)> = betas.iter().map(|&b| self.penalties(b)).collect();
        let mut best = (f64::INFINITY, u32::MAX, 0u64);
        'outer: for raw in 0..(1u64 << (n - 1)) {
            let bits = raw << 1 | 1;
            for b in 1..n {
                if bits >> b & 1 == 1 && bits >> self.parent[b] & 1 == 0 {
                    continue 'outer;
                }
            }
            let mut cost = self.inc[0];
            for b in 1..n {
                let (on, off) = pen[self.level_of[b] - 1];
                cost += if bits >> b & 1 == 1 {
                    self.inc[b] + on
                } else {
                    self.exc[b] + off
                };
            }
            let key = (cost, bits.count_ones(), bits);
            if key.0 < best.0 || (key.0 == best.0 && key.1 < best.1) {
                best = key;
            }
        }
        let mask = self.to_mask(best.2);
        let levels = (1..=self.depth)
            .map(|j| LevelDiagnostics {
                level: j,
                grid_size: 1,
                chosen_index: 0,
                kept: mask.count_at(j),
            })
            .collect();
        PruneResult {
            coefficients: estimate_coefficients(pyramid, &mask, model),
            mask,
            beta_hat: None,
            total_cost: best.0,
            levels,
            stats: BranchStats::default(),
        }
    }

    /// All proper configurations of the subtree under node `root` (bit index)
    /// with the root set.
    fn subtrees(&self, root: usize) -> Vec<u64> {
        let mut out = Vec::new();
        self.expand(1u64 << root, vec![root], &mut out);
        out
    }

    fn expand(&self, bits: u64, frontier: Vec<usize>, out: &mut Vec<u64>) {
        let level = match frontier.first() {
            Some(&b) => self.level_of[b],
            None => {
                out.push(bits);
                return;
            }
        };
        if level == self.depth {
            out.push(bits);
            return;
        }
        let mut next = Vec::new();
        for &b in &frontier {
            let i = b - self.offset[level];
            for c in child_slots(self.dim, level, i).iter() {
                next.push(self.offset[level + 1] + c);
            }
        }
        for subset in 0..(1u64 << next.len()) {
            let mut nb = bits;
            let mut nf = Vec::new();
            for (t, &c) in next.iter().enumerate() {
                if subset >> t & 1 == 1 {
                    nb |= 1 << c;
                    nf.push(c);
                }
            }
            self.expand(nb, nf, out);
        }
    }

    fn descendants(&self, root: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut frontier = vec![root];
        while let Some(&b) = frontier.first() {
            let level = self.level_of[b];
            if level == self.depth {
                break;
            }
            let mut next = Vec::new();
            for &b in &frontier {
                let i = b - self.offset[level];
                for c in child_slots(self.dim, level, i).iter() {
                    next.push(self.offset[level + 1] + c);
                }
            }
            out.extend_from_slice(&next);
            frontier = next;
        }
        out
    }

    fn auto(&self, pyramid: &Pyramid, model: &PruneModel, hyper: Hyperprior) -> PruneResult {
        let depth = self.depth;
        let w = self.weight;
        let all = self.subtrees(0);
        let levels_n = depth + 1;
        let mut count = vec![0u32; all.len() * levels_n];
        let mut data = vec![0.0f64; all.len() * levels_n];
        for (t, &bits) in all.iter().enumerate() {
            for b in 0..self.len() {
                let l = self.level_of[b];
                if bits >> b & 1 == 1 {
                    count[t * levels_n + l] += 1;
                    data[t * levels_n + l] += self.inc[b];
                } else {
                    data[t * levels_n + l] += self.exc[b];
                }
            }
        }
        let hyper_term = |beta: f64| -> f64 {
            if hyper.a == 0.0 {
                0.0
            } else {
                -w * hyper.a * (0.5 - beta).ln()
            }
        };
        let level_cost = |t: usize, l: usize, beta: f64| -> f64 {
            let c = count[t * levels_n + l] as f64;
            let n = self.nodes_at(l) as f64;
            let (on, off) = self.penalties(beta);
            let on_part = if c == 0.0 { 0.0 } else { c * on };
            data[t * levels_n + l] + on_part + (n - c) * off + n * hyper_term(beta)
        };

        let mut beta_hat = vec![0.0; depth + 1];
        let mut level_gaps = vec![Vec::new(); depth + 1];
        let mut diagnostics = Vec::with_capacity(depth);
        for j in (1..=depth).rev() {
            let mut gaps = Vec::with_capacity(self.nodes_at(j));
            for b in self.offset[j]..self.offset[j + 1] {
                let desc = self.descendants(b);
                let mut pruned = self.exc[b];
                for &d in &desc {
                    pruned += self.exc[d] + self.penalties(beta_hat[self.level_of[d]]).1;
                }
                let mut kept = f64::INFINITY;
                for bits in self.subtrees(b) {
                    let mut c = self.inc[b];
                    for &d in &desc {
                        let (on, off) = self.penalties(beta_hat[self.level_of[d]]);
                        c += if bits >> d & 1 == 1 {
                            self.inc[d] + on
                        } else {
                            self.exc[d] + off
                        };
                    }
                    kept = kept.min(c);
                }
                let mut d = pruned - kept;
                if d.abs() <= GAP_SNAP * pruned.abs().max(1.0) {
                    d = 0.0;
                }
                gaps.push(d);
            }

            level_gaps[j] = gaps.clone();
            let mut grid = vec![0.0];
            for &d in &gaps {
                if d > 0.0 {
                    grid.push(1.0 / (1.0 + (d / w).exp()));
                }
            }
            if hyper.a == 0.0 && gaps.iter().any(|&d| d <= 0.0) {
                grid.push(0.5 - HALF_CLAMP);
            }
            grid.sort_by(f64::total_cmp);
            grid.dedup();

            let mut chosen = 0;
            let mut best = f64::INFINITY;
            for (g, &beta) in grid.iter().enumerate() {
                let mut trial = beta_hat.clone();
                trial[j] = beta;
                let mut min = f64::INFINITY;
                for t in 0..all.len() {
                    let c: f64 = (j..=depth).map(|l| level_cost(t, l, trial[l])).sum();
                    min = min.min(c);
                }
                // a lone node at its own grid point costs e^{-D} more than
                // dropping it, far below rounding; such near-ties go to the
                // smaller beta
                if g == 0 || min < best - TIE_TOL * best.abs().max(1.0) {
                    best = min;
                    chosen = g;
                }
            }
            beta_hat[j] = grid[chosen];
            diagnostics.push(LevelDiagnostics {
                level: j,
                grid_size: grid.len(),
                chosen_index: chosen,
                kept: 0,
            });
        }

        // At the chosen grid point the node that generated it is exactly
        // indifferent; such nodes are kept, as in the threshold set
        // {beta_k >= beta_hat}. The resulting mask must still be a global
        // minimiser, which the enumeration below checks.
        let mut rule = 1u64;
        for j in 1..=depth {
            let lam = if beta_hat[j] == 0.0 {
                f64::INFINITY
            } else {
                (1.0 - beta_hat[j]).ln() - beta_hat[j].ln()
            };
            for (i, &d) in level_gaps[j].iter().enumerate() {
                let b = self.offset[j] + i;
                let keep = d > 0.0 && d >= w * lam - GAP_SNAP * d.abs().max(1.0);
                if keep && rule >> self.parent[b] & 1 == 1 {
                    rule |= 1 << b;
                }
            }
        }
        let total = |t: usize| -> f64 {
            data[t * levels_n]
                + (1..=depth)
                    .map(|l| level_cost(t, l, beta_hat[l]))
                    .sum::<f64>()
        };
        let mut best = (f64::INFINITY, 0u64);
        let mut rule_cost = f64::INFINITY;
        for (t, &bits) in all.iter().enumerate() {
            let c = total(t);
            if bits == rule {
                rule_cost = c;
            }
            if c < best.0 {
                best = (c, bits);
            }
        }
        if rule_cost <= best.0 + GAP_SNAP * best.0.abs().max(1.0) {
            best.1 = rule;
        }
        let mask = self.to_mask(best.1);
        diagnostics.reverse();
        for d in &mut diagnostics {
            d.kept = mask.count_at(d.level);
        }
        PruneResult {
            coefficients: estimate_coefficients(pyramid, &mask, model),
            mask,
            beta_hat: Some(beta_hat[1..].to_vec()),
            total_cost: best.0,
            levels: diagnostics,
            stats: BranchStats::default(),
        }
    }
}
