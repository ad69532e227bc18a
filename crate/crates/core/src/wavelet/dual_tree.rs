//! Quaternion wavelet transforms built from four separable real transforms.
//!
//! Component `c` of a quaternion uses tree `g` along x when `c & 1` and tree
//! `g` along y when `c & 2`, giving the order `(hh, gh, hg, gg)`.

use ndarray::Array2;
use rayon::prelude::*;

use super::{
    best_basis, check_levels, dwt2_scheduled, split2, Coeffs, DecompositionTree, DualTreeFilterSet, FilterBank,
    PacketTree, SubbandNode, TransformKind,
};
use crate::error::Result;
use crate::imagedata::Image;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Tree {
    H,
    G,
}

fn component_trees(component: usize) -> (Tree, Tree) {
    let pick = |bit: bool| if bit { Tree::G } else { Tree::H };
    (pick(component & 1 != 0), pick(component & 2 != 0))
}

impl DualTreeFilterSet {
    fn stage(&self, tree: Tree, level: usize) -> &FilterBank {
        match (tree, level) {
            (Tree::H, 1) => &self.first_stage_h,
            (Tree::G, 1) => &self.first_stage_g,
            (Tree::H, _) => &self.later_h,
            (Tree::G, _) => &self.later_g,
        }
    }

    /// Filters for splitting a packet node along one axis. Once the axis has
    /// left its low-pass branch both trees share the same pair.
    fn packet_stage(&self, tree: Tree, level: usize, axis_all_low: bool) -> &FilterBank {
        if axis_all_low {
            self.stage(tree, level)
        } else {
            &self.later_h
        }
    }
}

fn zip_quaternion(parts: [Array2<f64>; 4]) -> Coeffs {
    Coeffs::Quat(Box::new(parts))
}

/// Dual-tree quaternion wavelet transform.
pub fn qwt2(image: &Image, filters: &DualTreeFilterSet, levels: usize) -> Result<DecompositionTree> {
    check_levels(image.width(), image.height(), levels)?;
    let components: Vec<DecompositionTree> = (0..4)
        .into_par_iter()
        .map(|c| {
            let (tx, ty) = component_trees(c);
            let schedule: Vec<_> = (1..=levels)
                .map(|l| (filters.stage(tx, l), filters.stage(ty, l)))
                .collect();
            dwt2_scheduled(image, &schedule)
        })
        .collect::<Result<_>>()?;

    let take = |pick: &dyn Fn(&DecompositionTree) -> &SubbandNode| {
        let parts: [Array2<f64>; 4] = std::array::from_fn(|c| match &pick(&components[c]).coeffs {
            Coeffs::Real(g) => g.clone(),
            Coeffs::Quat(_) => unreachable!("component transforms are real"),
        });
        let first = pick(&components[0]);
        SubbandNode::new(first.depth, first.node_index, zip_quaternion(parts))
    };
    let nodes = (0..components[0].nodes.len())
        .map(|k| take(&|t: &DecompositionTree| &t.nodes[k]))
        .collect();
    let approx = take(&|t: &DecompositionTree| &t.approx);
    Ok(DecompositionTree {
        kind: TransformKind::Qwt,
        levels,
        width: image.width(),
        height: image.height(),
        nodes,
        approx,
    })
}

/// Bits marking a high-pass choice along x (`0b10` per digit) or y (`0b01`).
fn axis_mask(depth: usize, bit: usize) -> usize {
    (0..depth).fold(0, |m, k| m | (bit << (2 * k)))
}

/// Uniform quaternion packet expansion: all four component trees follow the
/// same split schedule.
pub fn qwpt_full(image: &Image, filters: &DualTreeFilterSet, levels: usize) -> Result<PacketTree> {
    check_levels(image.width(), image.height(), levels)?;
    let components: Vec<Vec<Vec<Array2<f64>>>> = (0..4)
        .into_par_iter()
        .map(|c| {
            let (tx, ty) = component_trees(c);
            let mut depths = vec![vec![image.pixels().clone()]];
            for depth in 0..levels {
                let level = depth + 1;
                let (xmask, ymask) = (axis_mask(depth, 2), axis_mask(depth, 1));
                let next = depths[depth]
                    .iter()
                    .enumerate()
                    .flat_map(|(index, grid)| {
                        let xb = filters.packet_stage(tx, level, index & xmask == 0);
                        let yb = filters.packet_stage(ty, level, index & ymask == 0);
                        split2(grid, xb, yb)
                    })
                    .collect();
                depths.push(next);
            }
            depths
        })
        .collect();

    let mut components = components.into_iter().map(|c| c.into_iter()).collect::<Vec<_>>();
    let depths = (0..=levels)
        .map(|_| {
            let per_comp: Vec<Vec<Array2<f64>>> = components.iter_mut().map(|c| c.next().unwrap()).collect();
            let n = per_comp[0].len();
            let mut per_comp = per_comp.into_iter().map(|v| v.into_iter()).collect::<Vec<_>>();
            (0..n)
                .map(|_| zip_quaternion(std::array::from_fn(|c| per_comp[c].next().unwrap())))
                .collect()
        })
        .collect();
    Ok(PacketTree {
        levels,
        width: image.width(),
        height: image.height(),
        depths,
    })
}

/// Best-basis quaternion packets: the tiling is chosen on squared
/// quaternion magnitudes and applied to all four components at once.
pub fn qwpt_best_basis(image: &Image, filters: &DualTreeFilterSet, levels: usize) -> Result<DecompositionTree> {
    Ok(best_basis(&qwpt_full(image, filters, levels)?))
}
