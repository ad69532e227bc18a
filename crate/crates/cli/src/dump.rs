//! CSV dumps of a decomposition.

use std::fmt::Write;

use wavesal::descriptors::{energy_stack, GgdTable, NOISE_FLOOR};
use wavesal::wavelet::{Coeffs, DecompositionTree};

/// `depth,node_index,orientation,x,y,c1[,c2,c3,c4]` for every node of the
/// cover, approximation included, in `(depth, node_index)` order.
///
/// With `flush`, coefficients whose square falls below the same noise floor
/// as the energy descriptors are written as 0.
pub fn coefficients_csv(tree: &DecompositionTree, flush: bool) -> String {
    let quat = tree.approx.coeffs.is_quaternion();
    let mut out = String::from("depth,node_index,orientation,x,y,c1");
    out.push_str(if quat { ",c2,c3,c4\n" } else { "\n" });
    let floor = if flush {
        NOISE_FLOOR * tree.total_energy() / (tree.width * tree.height) as f64
    } else {
        0.0
    };
    let clean = |c: f64| if c * c < floor { 0.0 } else { c };

    let mut nodes: Vec<_> = tree.nodes.iter().chain(std::iter::once(&tree.approx)).collect();
    nodes.sort_by_key(|n| (n.depth, n.node_index));
    for node in nodes {
        let (w, h) = node.coeffs.dims();
        for y in 0..h {
            for x in 0..w {
                let _ = write!(out, "{},{},{},{x},{y}", node.depth, node.node_index, node.orientation);
                match &node.coeffs {
                    Coeffs::Real(g) => {
                        let _ = write!(out, ",{}", clean(g[[y, x]]));
                    }
                    Coeffs::Quat(q) => {
                        for part in q.iter() {
                            let _ = write!(out, ",{}", clean(part[[y, x]]));
                        }
                    }
                }
                out.push('\n');
            }
        }
    }
    out
}

/// `depth,band_id,alpha,beta` for each detail band that could be fitted.
pub fn ggd_csv(tree: &DecompositionTree) -> String {
    GgdTable::fit(tree).to_csv(&energy_stack(tree))
}
