//! Full wavelet-packet trees and the best-basis search over them.

use super::{check_levels, split2, Coeffs, DecompositionTree, FilterBank, SubbandNode, TransformKind};
use crate::error::Result;
use crate::imagedata::Image;

/// Every node of a uniform packet expansion, depth 0 (the image) through
/// `levels`. `depths[d][i]` is node `i` at depth `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketTree {
    pub levels: usize,
    pub width: usize,
    pub height: usize,
    pub(crate) depths: Vec<Vec<Coeffs>>,
}

impl PacketTree {
    pub fn node(&self, depth: usize, index: usize) -> &Coeffs {
        &self.depths[depth][index]
    }

    pub fn nodes_at(&self, depth: usize) -> &[Coeffs] {
        &self.depths[depth]
    }

    pub fn is_dual_tree(&self) -> bool {
        self.depths[0][0].is_quaternion()
    }

    pub fn kind(&self) -> TransformKind {
        if self.is_dual_tree() {
            TransformKind::Qwptbb
        } else {
            TransformKind::Dwptbb
        }
    }

    pub fn root_energy(&self) -> f64 {
        self.depths[0][0].energy()
    }

    /// Materializes the sub-bands selected by `tiling`.
    pub fn to_tree(&self, tiling: &Tiling) -> DecompositionTree {
        let mut nodes = Vec::with_capacity(tiling.nodes.len());
        let mut approx = None;
        for &(depth, index) in &tiling.nodes {
            let node = SubbandNode::new(depth, index, self.node(depth, index).clone());
            if index == 0 {
                approx = Some(node);
            } else {
                nodes.push(node);
            }
        }
        DecompositionTree {
            kind: self.kind(),
            levels: self.levels,
            width: self.width,
            height: self.height,
            nodes,
            approx: approx.expect("a complete tiling contains the all-low node"),
        }
    }
}

/// Uniform packet expansion with one bank for every split.
pub fn dwpt_full(image: &Image, bank: &FilterBank, levels: usize) -> Result<PacketTree> {
    check_levels(image.width(), image.height(), levels)?;
    let mut depths = vec![vec![Coeffs::Real(image.pixels().clone())]];
    for depth in 0..levels {
        let next = depths[depth]
            .iter()
            .flat_map(|parent| {
                let Coeffs::Real(grid) = parent else { unreachable!("single-tree packet") };
                split2(grid, bank, bank).map(Coeffs::Real)
            })
            .collect();
        depths.push(next);
    }
    Ok(PacketTree {
        levels,
        width: image.width(),
        height: image.height(),
        depths,
    })
}

/// Additive Shannon cost `−Σ v ln v` where `v` is each coefficient's energy
/// divided by `root_energy`. Zero-energy terms contribute 0.
pub fn node_cost(coeffs: &Coeffs, root_energy: f64) -> f64 {
    if root_energy <= 0.0 {
        return 0.0;
    }
    coeffs
        .energy_grid()
        .iter()
        .map(|&e| {
            let v = e / root_energy;
            if v > 0.0 {
                -v * v.ln()
            } else {
                0.0
            }
        })
        .sum()
}

/// A set of packet nodes, sorted by `(depth, index)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tiling {
    pub levels: usize,
    pub nodes: Vec<(usize, usize)>,
}

impl Tiling {
    pub fn new(levels: usize, mut nodes: Vec<(usize, usize)>) -> Self {
        nodes.sort_unstable();
        Tiling { levels, nodes }
    }

    pub fn root(levels: usize) -> Self {
        Self::new(levels, vec![(0, 0)])
    }

    /// Every node at the maximum depth.
    pub fn uniform(levels: usize) -> Self {
        Self::new(levels, (0..1usize << (2 * levels)).map(|i| (levels, i)).collect())
    }

    /// The standard wavelet basis: three details per depth plus the final
    /// all-low node.
    pub fn dwt(levels: usize) -> Self {
        let mut nodes: Vec<_> = (1..=levels).flat_map(|d| (1..4).map(move |i| (d, i))).collect();
        nodes.push((levels, 0));
        Self::new(levels, nodes)
    }

    /// True when every max-depth leaf has exactly one ancestor-or-self here.
    pub fn is_complete(&self) -> bool {
        let leaves = 1usize << (2 * self.levels);
        let mut hits = vec![0u32; leaves];
        for &(depth, index) in &self.nodes {
            if depth > self.levels || index >= 1 << (2 * depth) {
                return false;
            }
            let span = 1usize << (2 * (self.levels - depth));
            for leaf in &mut hits[index * span..(index + 1) * span] {
                *leaf += 1;
            }
        }
        hits.iter().all(|&h| h == 1)
    }

    /// Summed node cost, accumulated in `(depth, index)` order.
    pub fn cost(&self, tree: &PacketTree) -> f64 {
        let root = tree.root_energy();
        self.nodes
            .iter()
            .map(|&(d, i)| node_cost(tree.node(d, i), root))
            .sum()
    }
}

/// Bottom-up dynamic program: a parent is kept iff its cost does not exceed
/// the best total cost of its four children.
pub fn best_tiling(tree: &PacketTree) -> Tiling {
    let root = tree.root_energy();
    let levels = tree.levels;
    let costs: Vec<Vec<f64>> = tree
        .depths
        .iter()
        .map(|nodes| nodes.iter().map(|c| node_cost(c, root)).collect())
        .collect();

    let mut best = costs[levels].clone();
    let mut keep: Vec<Vec<bool>> = vec![Vec::new(); levels + 1];
    keep[levels] = vec![true; best.len()];
    for depth in (0..levels).rev() {
        let (next_best, next_keep): (Vec<f64>, Vec<bool>) = costs[depth]
            .iter()
            .enumerate()
            .map(|(i, &own)| {
                let split: f64 = best[4 * i..4 * i + 4].iter().sum();
                if own <= split {
                    (own, true)
                } else {
                    (split, false)
                }
            })
            .unzip();
        best = next_best;
        keep[depth] = next_keep;
    }

    let mut chosen = Vec::new();
    let mut stack = vec![(0usize, 0usize)];
    while let Some((depth, index)) = stack.pop() {
        if keep[depth][index] {
            chosen.push((depth, index));
        } else {
            stack.extend((0..4).map(|k| (depth + 1, 4 * index + k)));
        }
    }
    Tiling::new(levels, chosen)
}

/// Best-basis decomposition of a full packet tree.
pub fn best_basis(tree: &PacketTree) -> DecompositionTree {
    tree.to_tree(&best_tiling(tree))
}
