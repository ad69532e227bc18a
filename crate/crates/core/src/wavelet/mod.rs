//! Separable 2-D wavelet transforms: DWT, full wavelet packets with a
//! best-basis search, and the dual-tree quaternion variants of both.
//!
//! All filtering uses periodic extension. A level whose input has an odd
//! side is first extended periodically by one sample, so a node at depth `j`
//! always measures `ceil(w / 2^j) × ceil(h / 2^j)`.
//!
//! Packet nodes are addressed in base 4: digit `k` (most significant first)
//! records the split taken at depth `k` as `0:LL, 1:LH, 2:HL, 3:HH`, the first
//! letter being the band along x (rows) and the second along y (columns).
//! Orientation tags follow `HL → H`, `LH → V`, `HH → D`, `LL → A`.

mod dual_tree;
mod dwt;
mod filters;
mod packet;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};

pub use dual_tree::{qwpt_best_basis, qwpt_full, qwt2};
pub use dwt::{dwt2, dwt2_scheduled, idwt2, merge2, split2};
pub use filters::{
    group_delay, DualTreeFilterSet, FilterBank, FilterLibrary, FILTER_DIR_ENV, FILTER_FILE, HILBERT_DELAY,
    HILBERT_DELAY_TOL,
};
pub use packet::{best_basis, best_tiling, dwpt_full, node_cost, PacketTree, Tiling};

/// The four descriptor back-ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransformKind {
    Dwt,
    Dwptbb,
    Qwt,
    Qwptbb,
}

impl TransformKind {
    pub const ALL: [TransformKind; 4] = [Self::Dwt, Self::Dwptbb, Self::Qwt, Self::Qwptbb];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Dwt => "dwt",
            Self::Dwptbb => "dwptbb",
            Self::Qwt => "qwt",
            Self::Qwptbb => "qwptbb",
        }
    }

    pub fn is_dual_tree(self) -> bool {
        matches!(self, Self::Qwt | Self::Qwptbb)
    }

    pub fn is_best_basis(self) -> bool {
        matches!(self, Self::Dwptbb | Self::Qwptbb)
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dwt" => Ok(Self::Dwt),
            "dwptbb" => Ok(Self::Dwptbb),
            "qwt" => Ok(Self::Qwt),
            "qwptbb" => Ok(Self::Qwptbb),
            other => Err(Error::param(format!("unknown transform `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    H,
    V,
    D,
    A,
}

impl Orientation {
    /// Tag of the last split digit of a packet address.
    pub fn from_digit(digit: usize) -> Self {
        match digit & 3 {
            0 => Self::A,
            1 => Self::V,
            2 => Self::H,
            _ => Self::D,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Self::H => 'H',
            Self::V => 'V',
            Self::D => 'D',
            Self::A => 'A',
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Real coefficients, or the `(hh, gh, hg, gg)` quadruple of a dual-tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Coeffs {
    Real(Array2<f64>),
    Quat(Box<[Array2<f64>; 4]>),
}

impl Coeffs {
    /// `(width, height)` of the coefficient grid.
    pub fn dims(&self) -> (usize, usize) {
        let g = match self {
            Coeffs::Real(g) => g,
            Coeffs::Quat(q) => &q[0],
        };
        (g.ncols(), g.nrows())
    }

    pub fn is_quaternion(&self) -> bool {
        matches!(self, Coeffs::Quat(_))
    }

    /// Per-coefficient energy: `c²`, or `‖q‖²` for quaternions.
    pub fn energy_grid(&self) -> Array2<f64> {
        match self {
            Coeffs::Real(g) => g.mapv(|c| c * c),
            Coeffs::Quat(q) => {
                let mut e = q[0].mapv(|c| c * c);
                for part in &q[1..] {
                    e.zip_mut_with(part, |acc, &c| *acc += c * c);
                }
                e
            }
        }
    }

    pub fn energy(&self) -> f64 {
        match self {
            Coeffs::Real(g) => g.iter().map(|c| c * c).sum(),
            Coeffs::Quat(q) => q.iter().flat_map(|g| g.iter()).map(|c| c * c).sum(),
        }
    }

    /// Values fed to the intra-band model: the coefficients themselves, or
    /// quaternion magnitudes.
    pub fn samples(&self) -> Vec<f64> {
        match self {
            Coeffs::Real(g) => g.iter().copied().collect(),
            Coeffs::Quat(_) => self.energy_grid().iter().map(|e| e.sqrt()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubbandNode {
    pub depth: usize,
    pub node_index: usize,
    pub orientation: Orientation,
    pub coeffs: Coeffs,
}

impl SubbandNode {
    pub(crate) fn new(depth: usize, node_index: usize, coeffs: Coeffs) -> Self {
        let orientation = if depth == 0 {
            Orientation::A
        } else {
            Orientation::from_digit(node_index)
        };
        SubbandNode {
            depth,
            node_index,
            orientation,
            coeffs,
        }
    }

    /// True for the all-low-pass node (the approximation) at any depth.
    pub fn is_approximation(&self) -> bool {
        self.node_index == 0
    }
}

/// Elementwise `√(a² + b² + c² + d²)` of a dual-tree node.
pub fn quaternion_magnitude(node: &SubbandNode) -> Result<Array2<f64>> {
    match &node.coeffs {
        Coeffs::Quat(_) => Ok(node.coeffs.energy_grid().mapv(f64::sqrt)),
        Coeffs::Real(_) => Err(Error::Kind(format!(
            "node ({}, {}) holds real coefficients, not quaternions",
            node.depth, node.node_index
        ))),
    }
}

/// A chosen set of sub-bands covering the image's frequency plane.
///
/// `nodes` holds every detail node sorted by `(depth, node_index)`; the
/// low-pass node that completes the cover is kept apart in `approx`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionTree {
    pub kind: TransformKind,
    pub levels: usize,
    pub width: usize,
    pub height: usize,
    pub nodes: Vec<SubbandNode>,
    pub approx: SubbandNode,
}

impl DecompositionTree {
    pub fn detail_energy(&self) -> f64 {
        self.nodes.iter().map(|n| n.coeffs.energy()).sum()
    }

    /// Energy of every node including the approximation.
    pub fn total_energy(&self) -> f64 {
        self.detail_energy() + self.approx.coeffs.energy()
    }

    pub fn node(&self, depth: usize, node_index: usize) -> Option<&SubbandNode> {
        if self.approx.depth == depth && self.approx.node_index == node_index {
            return Some(&self.approx);
        }
        self.nodes.iter().find(|n| n.depth == depth && n.node_index == node_index)
    }

    /// `(depth, node_index)` of every node in the cover, approximation included.
    pub fn cover(&self) -> Vec<(usize, usize)> {
        let mut cover: Vec<_> = self
            .nodes
            .iter()
            .chain(std::iter::once(&self.approx))
            .map(|n| (n.depth, n.node_index))
            .collect();
        cover.sort_unstable();
        cover
    }
}

/// Deepest decomposition a `width`×`height` image supports: `⌊log₂ min(w, h)⌋`.
pub fn max_levels(width: usize, height: usize) -> usize {
    width.min(height).max(1).ilog2() as usize
}

pub(crate) fn check_levels(width: usize, height: usize, levels: usize) -> Result<()> {
    if levels == 0 {
        return Err(Error::param("decomposition needs at least one level"));
    }
    if levels > max_levels(width, height) {
        return Err(Error::param(format!(
            "{levels} levels is too deep for a {width}x{height} image"
        )));
    }
    Ok(())
}

/// `ceil(n / 2^depth)`.
pub(crate) fn scaled_len(n: usize, depth: usize) -> usize {
    n.div_ceil(1 << depth)
}
