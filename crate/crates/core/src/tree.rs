//! Coordinates on the finite dyadic index tree and per-node branch statistics.
//!
//! Nodes are stored level-major: level `j` owns `2^(d j)` slots addressed by
//! a flattened position (`k` in 1D, `k1 * 2^j + k2` in 2D).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavelet::Pyramid;

/// Tree coordinate `(j, k)`; `k[1]` is unused (zero) in 1D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId {
    pub dim: usize,
    pub level: usize,
    pub k: [usize; 2],
}

impl NodeId {
    pub fn d1(level: usize, k: usize) -> Self {
        Self {
            dim: 1,
            level,
            k: [k, 0],
        }
    }

    pub fn d2(level: usize, k1: usize, k2: usize) -> Self {
        Self {
            dim: 2,
            level,
            k: [k1, k2],
        }
    }

    pub fn from_flat(dim: usize, level: usize, index: usize) -> Self {
        if dim == 1 {
            Self::d1(level, index)
        } else {
            let side = 1 << level;
            Self::d2(level, index / side, index % side)
        }
    }

    pub fn flat(&self) -> usize {
        if self.dim == 1 {
            self.k[0]
        } else {
            (self.k[0] << self.level) + self.k[1]
        }
    }
}

/// `(j - 1, floor(k / 2))` componentwise.
pub fn parent(node: NodeId) -> Result<NodeId> {
    if node.level == 0 {
        return Err(Error::NoParent);
    }
    Ok(NodeId {
        dim: node.dim,
        level: node.level - 1,
        k: [node.k[0] / 2, node.k[1] / 2],
    })
}

/// The `2^d` children `(j + 1, 2k + delta)` in lexicographic `delta` order.
pub fn children(node: NodeId, depth: usize) -> Result<Vec<NodeId>> {
    if node.level >= depth {
        return Err(Error::NoChildren {
            level: node.level,
            depth,
        });
    }
    let j = node.level + 1;
    Ok(match node.dim {
        1 => vec![
            NodeId::d1(j, 2 * node.k[0]),
            NodeId::d1(j, 2 * node.k[0] + 1),
        ],
        _ => {
            let (a, b) = (2 * node.k[0], 2 * node.k[1]);
            vec![
                NodeId::d2(j, a, b),
                NodeId::d2(j, a, b + 1),
                NodeId::d2(j, a + 1, b),
                NodeId::d2(j, a + 1, b + 1),
            ]
        }
    })
}

/// Flattened child positions of flattened node `index` on `level`.
pub(crate) fn child_slots(dim: usize, level: usize, index: usize) -> ChildSlots {
    if dim == 1 {
        ChildSlots {
            slots: [2 * index, 2 * index + 1, 0, 0],
            len: 2,
        }
    } else {
        let side = 1usize << level;
        let (r, c) = (index / side, index % side);
        let next = side * 2;
        let base = 2 * r * next + 2 * c;
        ChildSlots {
            slots: [base, base + 1, base + next, base + next + 1],
            len: 4,
        }
    }
}

pub(crate) struct ChildSlots {
    slots: [usize; 4],
    len: usize,
}

impl ChildSlots {
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.slots[..self.len].iter().copied()
    }
}

/// Flattened parent slot of `index` on `level >= 1`.
pub(crate) fn parent_slot(dim: usize, level: usize, index: usize) -> usize {
    if dim == 1 {
        index / 2
    } else {
        let side = 1usize << level;
        let (r, c) = (index / side, index % side);
        (r / 2) * (side / 2) + c / 2
    }
}

/// Per-node inclusion bits over the whole tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MaskRepr", into = "MaskRepr")]
pub struct TreeMask {
    dim: usize,
    depth: usize,
    levels: Vec<Vec<bool>>,
}

#[derive(Serialize, Deserialize)]
struct MaskRepr {
    #[serde(rename = "J")]
    depth: usize,
    dim: usize,
    levels: Vec<Vec<u8>>,
}

impl From<TreeMask> for MaskRepr {
    fn from(m: TreeMask) -> Self {
        MaskRepr {
            depth: m.depth,
            dim: m.dim,
            levels: m
                .levels
                .iter()
                .map(|l| l.iter().map(|&b| b as u8).collect())
                .collect(),
        }
    }
}

impl TryFrom<MaskRepr> for TreeMask {
    type Error = String;

    fn try_from(r: MaskRepr) -> std::result::Result<Self, String> {
        if r.dim != 1 && r.dim != 2 {
            return Err(format!("unsupported dimension {}", r.dim));
        }
        if r.levels.len() != r.depth + 1 {
            return Err(format!(
                "mask has {} levels, expected {}",
                r.levels.len(),
                r.depth + 1
            ));
        }
        let mut levels = Vec::with_capacity(r.levels.len());
        for (j, l) in r.levels.into_iter().enumerate() {
            if l.len() != 1 << (r.dim * j) {
                return Err(format!("level {j} has {} entries", l.len()));
            }
            if l.iter().any(|&b| b > 1) {
                return Err(format!("level {j} holds a value other than 0/1"));
            }
            levels.push(l.into_iter().map(|b| b == 1).collect());
        }
        Ok(TreeMask {
            dim: r.dim,
            depth: r.depth,
            levels,
        })
    }
}

impl TreeMask {
    pub fn empty(dim: usize, depth: usize) -> Self {
        Self {
            dim,
            depth,
            levels: (0..=depth).map(|j| vec![false; 1 << (dim * j)]).collect(),
        }
    }

    pub fn root_only(dim: usize, depth: usize) -> Self {
        let mut m = Self::empty(dim, depth);
        m.levels[0][0] = true;
        m
    }

    pub fn full(dim: usize, depth: usize) -> Self {
        Self {
            dim,
            depth,
            levels: (0..=depth).map(|j| vec![true; 1 << (dim * j)]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn level(&self, level: usize) -> &[bool] {
        &self.levels[level]
    }

    pub fn get(&self, level: usize, index: usize) -> bool {
        self.levels[level][index]
    }

    pub fn set(&mut self, level: usize, index: usize, value: bool) {
        self.levels[level][index] = value;
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.levels[node.level][node.flat()]
    }

    /// Number of set bits.
    pub fn count(&self) -> usize {
        self.levels.iter().flatten().filter(|&&b| b).count()
    }

    pub fn count_at(&self, level: usize) -> usize {
        self.levels[level].iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &TreeMask) -> bool {
        self.levels
            .iter()
            .flatten()
            .zip(other.levels.iter().flatten())
            .all(|(&a, &b)| !a || b)
    }

    /// Effective membership `t~_jk`: a node survives only if it and all of
    /// its ancestors are set.
    pub fn project(&self) -> TreeMask {
        let mut out = self.clone();
        for j in 1..=self.depth {
            for i in 0..out.levels[j].len() {
                let p = parent_slot(self.dim, j, i);
                out.levels[j][i] = self.levels[j][i] && out.levels[j - 1][p];
            }
        }
        out
    }
}

/// True iff every set node other than the root has its parent set.
pub fn validate_proper(mask: &TreeMask) -> bool {
    (1..=mask.depth).all(|j| {
        mask.levels[j]
            .iter()
            .enumerate()
            .all(|(i, &on)| !on || mask.levels[j - 1][parent_slot(mask.dim, j, i)])
    })
}

/// Cached per-node quantities used by the pruning recursion.
///
/// `energy[j][k]` is `||m restricted to T_jk||^2` summed over bands. The
/// pruning routines fill `weight` (optimised subtree weight `F_jk`) and `gap`
/// (`D_jk`, prune-minus-keep cost); [`subtree_energies`] leaves them empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BranchStats {
    pub energy: Vec<Vec<f64>>,
    pub weight: Vec<Vec<f64>>,
    pub gap: Vec<Vec<f64>>,
}

/// Bottom-up subtree energies. Each node sums its own bands (band order)
/// and then its children in slot order, so the recursion holds exactly.
pub fn subtree_energies(pyramid: &Pyramid) -> BranchStats {
    let depth = pyramid.depth();
    let dim = pyramid.dim();
    let mut energy: Vec<Vec<f64>> = vec![Vec::new(); depth + 1];
    for j in (0..=depth).rev() {
        let n = pyramid.nodes_at(j);
        let mut level = Vec::with_capacity(n);
        for i in 0..n {
            let mut e = pyramid.node_coeffs(j, i).map(|v| v * v).sum::<f64>();
            if j < depth {
                for c in child_slots(dim, j, i).iter() {
                    e += energy[j + 1][c];
                }
            }
            level.push(e);
        }
        energy[j] = level;
    }
    BranchStats {
        energy,
        weight: Vec::new(),
        gap: Vec::new(),
    }
}
