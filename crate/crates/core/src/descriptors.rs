//! Sub-band energy descriptors.
//!
//! Each detail node of a decomposition becomes a layer of per-coefficient
//! energies (`c²`, or `‖q‖²` for quaternion nodes). A layer at depth `j` is
//! aligned with the image by nearest-neighbour block replication: pixel
//! `(x, y)` reads coefficient `(x >> j, y >> j)`. Layers are stored at their
//! native size and replicated on access.
//!
//! The per-pixel inter-band distribution normalizes the energies of all
//! layers up to a depth; the intra-band model is a generalized Gaussian fitted
//! to each sub-band by moment matching.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::Array2;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::wavelet::{DecompositionTree, Orientation, TransformKind};

/// Identifies a sub-band within its depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BandId {
    pub node_index: usize,
    pub orientation: Orientation,
}

impl fmt::Display for BandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.node_index, self.orientation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub depth: usize,
    pub band: BandId,
    energy: Array2<f64>,
}

impl Layer {
    /// A layer from energies at native resolution (`ceil(w / 2^depth)` wide).
    pub fn new(depth: usize, band: BandId, energy: Array2<f64>) -> Self {
        Layer { depth, band, energy }
    }

    /// Energy at image pixel `(x, y)`.
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.energy[[y >> self.depth, x >> self.depth]]
    }

    /// Energies at the coefficient grid's own resolution.
    pub fn native(&self) -> &Array2<f64> {
        &self.energy
    }

    /// The layer replicated over `2^depth × 2^depth` blocks and cropped to
    /// `width × height`.
    pub fn full_resolution(&self, width: usize, height: usize) -> Array2<f64> {
        Array2::from_shape_fn((height, width), |(y, x)| self.at(x, y))
    }
}

/// Energy layers ordered by `(depth, node_index)`, grouped by depth.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandStack {
    pub width: usize,
    pub height: usize,
    pub kind: TransformKind,
    layers: Vec<Layer>,
    depth_schedule: Vec<usize>,
    /// `group_ends[m]` is one past the last layer with depth ≤ `depth_schedule[m]`.
    group_ends: Vec<usize>,
}

impl SubbandStack {
    /// Builds a stack from explicit layers. Energies must be finite and ≥ 0.
    pub fn from_layers(width: usize, height: usize, kind: TransformKind, mut layers: Vec<Layer>) -> Result<Self> {
        layers.sort_by_key(|l| (l.depth, l.band.node_index));
        for l in &layers {
            if l.energy.iter().any(|e| !e.is_finite() || *e < 0.0) {
                return Err(Error::param(format!("layer ({}, {}) has a negative or non-finite energy", l.depth, l.band)));
            }
            let (h, w) = l.energy.dim();
            if (w << l.depth) < width || (h << l.depth) < height {
                return Err(Error::param(format!("layer ({}, {}) does not cover the image", l.depth, l.band)));
            }
        }
        let mut depth_schedule = Vec::new();
        let mut group_ends = Vec::new();
        for (i, l) in layers.iter().enumerate() {
            if depth_schedule.last() != Some(&l.depth) {
                depth_schedule.push(l.depth);
                group_ends.push(i + 1);
            } else {
                *group_ends.last_mut().unwrap() = i + 1;
            }
        }
        Ok(SubbandStack {
            width,
            height,
            kind,
            layers,
            depth_schedule,
            group_ends,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn depth_schedule(&self) -> &[usize] {
        &self.depth_schedule
    }

    /// Number of depth positions.
    pub fn positions(&self) -> usize {
        self.depth_schedule.len()
    }

    /// Layer index range of depth position `pos` alone.
    pub fn group(&self, pos: usize) -> std::ops::Range<usize> {
        let start = if pos == 0 { 0 } else { self.group_ends[pos - 1] };
        start..self.group_ends[pos]
    }

    /// Number of layers with depth ≤ `depth_schedule[pos]`.
    pub fn prefix_len(&self, pos: usize) -> usize {
        self.group_ends[pos]
    }

    pub(crate) fn check_pixel(&self, x: usize, y: usize) -> Result<()> {
        if x >= self.width || y >= self.height {
            return Err(Error::param(format!(
                "pixel ({x}, {y}) outside {}x{} stack",
                self.width, self.height
            )));
        }
        Ok(())
    }

    pub(crate) fn check_position(&self, pos: usize) -> Result<()> {
        if pos >= self.positions() {
            return Err(Error::param(format!(
                "depth position {pos} out of range for {} positions",
                self.positions()
            )));
        }
        Ok(())
    }

    /// Energies of every layer at `(x, y)`, in layer order.
    pub fn energies_at(&self, x: usize, y: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.layers.iter().map(|l| l.at(x, y)));
    }
}

/// Energies below this fraction of the tree's mean energy per pixel are
/// filter round-off (e.g. the Q-shift pair is zero at π only to ~4e-8) and
/// are flushed to 0 so that flat regions stay exactly flat.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Per-pixel energy layers for every detail node of `tree`.
pub fn energy_stack(tree: &DecompositionTree) -> SubbandStack {
    let floor = NOISE_FLOOR * tree.total_energy() / (tree.width * tree.height) as f64;
    let layers = tree
        .nodes
        .iter()
        .map(|n| Layer {
            depth: n.depth,
            band: BandId {
                node_index: n.node_index,
                orientation: n.orientation,
            },
            energy: n.coeffs.energy_grid().mapv(|e| if e < floor { 0.0 } else { e }),
        })
        .collect();
    SubbandStack::from_layers(tree.width, tree.height, tree.kind, layers)
        .expect("squared coefficients are nonnegative and cover the image")
}

/// Normalizes `energies` into a distribution; all-zero input gives the
/// uniform distribution.
pub fn normalize(energies: &[f64]) -> Vec<f64> {
    let total: f64 = energies.iter().sum();
    if total > 0.0 {
        energies.iter().map(|e| e / total).collect()
    } else {
        vec![1.0 / energies.len() as f64; energies.len()]
    }
}

/// Distribution of energy at `(x, y)` across all layers with depth up to
/// `depth_schedule[upto_pos]`.
pub fn interband_pdf(stack: &SubbandStack, x: usize, y: usize, upto_pos: usize) -> Result<Vec<f64>> {
    stack.check_pixel(x, y)?;
    stack.check_position(upto_pos)?;
    let energies: Vec<f64> = stack.layers[..stack.prefix_len(upto_pos)]
        .iter()
        .map(|l| l.at(x, y))
        .collect();
    Ok(normalize(&energies))
}

/// Generalized Gaussian `p(x) = β / (2αΓ(1/β)) · exp(−(|x|/α)^β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgdParams {
    pub alpha: f64,
    pub beta: f64,
}

pub const BETA_MIN: f64 = 0.05;
pub const BETA_MAX: f64 = 5.0;
const BETA_TOL: f64 = 1e-8;
const MIN_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketEdge {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgdFit {
    pub params: GgdParams,
    /// Set when the moment ratio fell outside the solver bracket and β was
    /// pinned to that edge.
    pub saturated: Option<BracketEdge>,
}

/// `Γ(2/β)² / (Γ(1/β) Γ(3/β))`, increasing in β.
fn moment_ratio(beta: f64) -> f64 {
    (2.0 * ln_gamma(2.0 / beta) - ln_gamma(1.0 / beta) - ln_gamma(3.0 / beta)).exp()
}

/// Moment-matching GGD fit: β solves `Γ(2/β)²/(Γ(1/β)Γ(3/β)) = m₁²/m₂` by
/// bisection on `[0.05, 5]`, then `α = √(m₂ Γ(1/β)/Γ(3/β))`.
pub fn fit_ggd(samples: &[f64]) -> Result<GgdFit> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::param(format!(
            "GGD fit needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let m1 = samples.iter().map(|c| c.abs()).sum::<f64>() / n;
    let m2 = samples.iter().map(|c| c * c).sum::<f64>() / n;
    if m2 <= 0.0 || !m2.is_finite() {
        return Err(Error::Degenerate("GGD fit of an all-zero sample".into()));
    }
    let rho = m1 * m1 / m2;

    let (beta, saturated) = if rho <= moment_ratio(BETA_MIN) {
        (BETA_MIN, Some(BracketEdge::Lower))
    } else if rho >= moment_ratio(BETA_MAX) {
        (BETA_MAX, Some(BracketEdge::Upper))
    } else {
        let (mut lo, mut hi) = (BETA_MIN, BETA_MAX);
        while hi - lo > BETA_TOL {
            let mid = 0.5 * (lo + hi);
            if moment_ratio(mid) < rho {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi), None)
    };
    let alpha = (m2 * (ln_gamma(1.0 / beta) - ln_gamma(3.0 / beta)).exp()).sqrt();
    Ok(GgdFit {
        params: GgdParams { alpha, beta },
        saturated,
    })
}

/// GGD density at a coefficient magnitude.
pub fn ggd_density(params: GgdParams, magnitude: f64) -> f64 {
    let GgdParams { alpha, beta } = params;
    let norm = (beta.ln() - (2.0 * alpha).ln() - ln_gamma(1.0 / beta)).exp();
    norm * (-(magnitude.abs() / alpha).powf(beta)).exp()
}

/// Fitted intra-band models keyed by `(depth, node_index)`. Sub-bands that
/// could not be fitted (too few or all-zero coefficients) are recorded with
/// the reason.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GgdTable {
    fitted: BTreeMap<(usize, usize), GgdFit>,
    failed: BTreeMap<(usize, usize), String>,
}

impl GgdTable {
    /// Fits every detail node of `tree` over all of its coefficients
    /// (quaternion nodes use magnitudes).
    pub fn fit(tree: &DecompositionTree) -> Self {
        let mut table = GgdTable::default();
        for node in &tree.nodes {
            let key = (node.depth, node.node_index);
            match fit_ggd(&node.coeffs.samples()) {
                Ok(fit) => {
                    table.fitted.insert(key, fit);
                }
                Err(e) => {
                    table.failed.insert(key, e.to_string());
                }
            }
        }
        table
    }

    pub fn insert(&mut self, depth: usize, node_index: usize, fit: GgdFit) {
        self.fitted.insert((depth, node_index), fit);
    }

    pub fn get(&self, depth: usize, node_index: usize) -> Option<GgdParams> {
        self.fitted.get(&(depth, node_index)).map(|f| f.params)
    }

    /// Parameters for `layer`, or a configuration error explaining why none
    /// exist.
    pub fn for_layer(&self, layer: &Layer) -> Result<GgdParams> {
        let key = (layer.depth, layer.band.node_index);
        self.get(key.0, key.1).ok_or_else(|| {
            let why = self.failed.get(&key).map(String::as_str).unwrap_or("never fitted");
            Error::Config(format!("no GGD parameters for sub-band ({}, {}): {why}", layer.depth, layer.band))
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &GgdFit)> {
        self.fitted.iter().map(|(k, v)| (*k, v))
    }

    /// CSV dump: `depth,band_id,alpha,beta`.
    pub fn to_csv(&self, stack: &SubbandStack) -> String {
        let mut out = String::from("depth,band_id,alpha,beta\n");
        for layer in stack.layers() {
            if let Some(p) = self.get(layer.depth, layer.band.node_index) {
                out.push_str(&format!("{},{},{},{}\n", layer.depth, layer.band, p.alpha, p.beta));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagedata::Image;
    use crate::wavelet::{dwt2, FilterLibrary};
    use ndarray::array;

    fn layer(depth: usize, idx: usize, e: Array2<f64>) -> Layer {
        Layer {
            depth,
            band: BandId {
                node_index: idx,
                orientation: Orientation::from_digit(idx),
            },
            energy: e,
        }
    }

    fn single_pixel_stack(energies: &[(usize, f64)]) -> SubbandStack {
        let layers = energies
            .iter()
            .enumerate()
            .map(|(i, &(d, e))| layer(d, i + 1, array![[e]]))
            .collect();
        SubbandStack::from_layers(1, 1, TransformKind::Dwt, layers).unwrap()
    }

    #[test]
    fn pdf_examples() {
        let s = single_pixel_stack(&[(1, 1.0), (1, 1.0), (1, 1.0)]);
        assert_eq!(interband_pdf(&s, 0, 0, 0).unwrap(), vec![1.0 / 3.0; 3]);
        let s = single_pixel_stack(&[(1, 0.0), (1, 0.0), (1, 0.0)]);
        assert_eq!(interband_pdf(&s, 0, 0, 0).unwrap(), vec![1.0 / 3.0; 3]);
        let s = single_pixel_stack(&[(1, 2.0), (1, 6.0), (1, 0.0), (2, 0.0), (2, 4.0), (2, 0.0)]);
        let p = interband_pdf(&s, 0, 0, 1).unwrap();
        let want = [1.0 / 6.0, 0.5, 0.0, 0.0, 1.0 / 3.0, 0.0];
        assert!(p.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-15), "{p:?}");
        assert_eq!(interband_pdf(&s, 0, 0, 0).unwrap(), vec![0.25, 0.75, 0.0]);
    }

    #[test]
    fn pdf_rejects_bad_pixel_and_position() {
        let s = single_pixel_stack(&[(1, 1.0)]);
        assert!(matches!(interband_pdf(&s, 1, 0, 0), Err(Error::Parameter(_))));
        assert!(matches!(interband_pdf(&s, 0, 0, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn energy_is_coefficient_square() {
        let img = Image::from_fn(8, 8, |x, _| if x == 3 { 1.0 } else { 0.0 }).unwrap();
        let tree = dwt2(&img, &FilterLibrary::builtin().bank("db4").unwrap(), 1).unwrap();
        let stack = energy_stack(&tree);
        for (node, layer) in tree.nodes.iter().zip(stack.layers()) {
            let crate::wavelet::Coeffs::Real(c) = &node.coeffs else { panic!() };
            for (e, v) in layer.native().iter().zip(c) {
                // round-off below the floor is flushed
                assert!(*e == v * v || (*e == 0.0 && v * v < 1e-20));
            }
        }
        let l = Layer { depth: 1, band: BandId { node_index: 1, orientation: Orientation::V }, energy: array![[-3.0f64]].mapv(|v| v * v) };
        assert_eq!(l.at(1, 1), 9.0);
    }

    #[test]
    fn dwt_stack_shape() {
        let img = Image::from_fn(32, 32, |x, y| ((x ^ y) % 7) as f64 / 7.0).unwrap();
        let tree = dwt2(&img, &FilterLibrary::builtin().bank("db4").unwrap(), 3).unwrap();
        let stack = energy_stack(&tree);
        assert_eq!(stack.layers().len(), 9);
        assert_eq!(stack.depth_schedule(), &[1, 2, 3]);
        assert_eq!(stack.group(1), 3..6);
        let full = stack.layers()[3].full_resolution(32, 32);
        assert_eq!(full.dim(), (32, 32));
        assert_eq!(full[[5, 6]], stack.layers()[3].native()[[1, 1]]);
    }

    #[test]
    fn constant_image_layers_are_zero() {
        let img = Image::from_fn(16, 16, |_, _| 0.3).unwrap();
        let tree = dwt2(&img, &FilterLibrary::builtin().bank("db4").unwrap(), 2).unwrap();
        let stack = energy_stack(&tree);
        assert!(stack.layers().iter().all(|l| l.native().iter().all(|&e| e == 0.0)));
    }

    #[test]
    fn constant_image_quaternion_layers_are_zero() {
        let img = Image::from_fn(16, 16, |_, _| 0.8).unwrap();
        let tree = crate::wavelet::qwt2(&img, &FilterLibrary::builtin().dual_tree().unwrap(), 3).unwrap();
        let stack = energy_stack(&tree);
        assert!(stack.layers().iter().all(|l| l.native().iter().all(|&e| e == 0.0)));
    }

    #[test]
    fn density_examples() {
        let g = ggd_density(GgdParams { alpha: 2f64.sqrt(), beta: 2.0 }, 0.0);
        assert!((g - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        let l = ggd_density(GgdParams { alpha: 1.0, beta: 1.0 }, 0.0);
        assert!((l - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_samples_saturate_upper_bracket() {
        let fit = fit_ggd(&[0.7; 32]).unwrap();
        assert_eq!(fit.params.beta, BETA_MAX);
        assert_eq!(fit.saturated, Some(BracketEdge::Upper));
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(fit_ggd(&[0.0; 32]), Err(Error::Degenerate(_))));
        assert!(matches!(fit_ggd(&[1.0; 15]), Err(Error::Parameter(_))));
    }

    #[test]
    fn moment_ratio_landmarks() {
        assert!((moment_ratio(2.0) - 2.0 / std::f64::consts::PI).abs() < 1e-12);
        assert!((moment_ratio(1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn missing_params_are_config_errors() {
        let l = layer(1, 1, array![[1.0]]);
        assert!(matches!(GgdTable::default().for_layer(&l), Err(Error::Config(_))));
    }
}
