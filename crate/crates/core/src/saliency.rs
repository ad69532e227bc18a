//! Information-theoretic scale saliency over sub-band energy descriptors.
//!
//! Depth positions index [`SubbandStack::depth_schedule`] from 0. The model
//! `M(m)` at position `m` is every layer with depth ≤ `schedule[m]`, the data
//! `D(m)` is the layers at `schedule[m]` alone, and the joint `(D(m+1), M(m))`
//! is exactly `M(m+1)`, so each pixel needs one entropy per group and one per
//! prefix.
//!
//! In observer mode an entropy is `−Σ p log₂ p` over the normalized energies
//! of a layer set. In searcher mode it is the cross-entropy `−Σ p log₂ q`
//! where `q` is each layer's fitted GGD density at the coefficient magnitude
//! (`√energy`).

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::descriptors::{energy_stack, ggd_density, interband_pdf, GgdTable, SubbandStack};
use crate::error::{Error, Result};
use crate::imagedata::{Image, SaliencyMap};
use crate::wavelet::{dwpt_full, dwt2, qwpt_best_basis, qwt2, best_basis, DecompositionTree, FilterLibrary, TransformKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Observer,
    Searcher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScaleRule {
    Wss,
    Dis,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Observer => "observer",
            Mode::Searcher => "searcher",
        }
    }
}

impl ScaleRule {
    pub fn as_str(self) -> &'static str {
        match self {
            ScaleRule::Wss => "wss",
            ScaleRule::Dis => "dis",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for ScaleRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "observer" => Ok(Mode::Observer),
            "searcher" => Ok(Mode::Searcher),
            other => Err(Error::param(format!("unknown mode `{other}`"))),
        }
    }
}

impl FromStr for ScaleRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wss" => Ok(ScaleRule::Wss),
            "dis" => Ok(ScaleRule::Dis),
            other => Err(Error::param(format!("unknown scale rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyConfig {
    pub mode: Mode,
    pub scale_rule: ScaleRule,
    pub levels: usize,
    pub transform_kind: TransformKind,
    /// Gaussian smoothing in pixels; 0 disables it.
    pub smoothing_sigma: f64,
    pub clamp_negative_mi: bool,
    /// Single-tree bank for DWT and DWPTBB.
    pub bank: String,
}

impl Default for SaliencyConfig {
    fn default() -> Self {
        SaliencyConfig {
            mode: Mode::Observer,
            scale_rule: ScaleRule::Wss,
            levels: 4,
            transform_kind: TransformKind::Dwt,
            smoothing_sigma: 0.0,
            clamp_negative_mi: true,
            bank: "db4".into(),
        }
    }
}

impl SaliencyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::param(format!(
                "levels must be at least 2 (mutual information needs two depths), got {}",
                self.levels
            )));
        }
        if !(self.smoothing_sigma.is_finite() && self.smoothing_sigma >= 0.0) {
            return Err(Error::param(format!("invalid smoothing sigma {}", self.smoothing_sigma)));
        }
        Ok(())
    }

    /// `transform.rule`, with `.searcher` appended in searcher mode.
    pub fn method_tag(&self) -> String {
        let mut tag = format!("{}.{}", self.transform_kind, self.scale_rule);
        if self.mode == Mode::Searcher {
            tag.push_str(".searcher");
        }
        tag
    }

    /// Every parameter that affects the map, as `key=value` pairs joined by `;`.
    pub fn canonical(&self) -> String {
        let bank = if self.transform_kind.is_dual_tree() { "dual-tree" } else { &self.bank };
        format!(
            "transform={};mode={};scale_rule={};levels={};sigma={:?};clamp_negative_mi={};bank={}",
            self.transform_kind, self.mode, self.scale_rule, self.levels, self.smoothing_sigma, self.clamp_negative_mi, bank
        )
    }

    /// SHA-256 of [`Self::canonical`], in hex.
    pub fn params_digest(&self) -> String {
        hex_digest(&self.canonical())
    }
}

pub(crate) fn hex_digest(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-pixel outcome of scale selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleEntry {
    /// Selected depth position (0-based).
    pub s_p: usize,
    /// `H(M(s_p))`.
    pub h: f64,
    /// `MI(D(s_p), M(s_p − 1))`, unclamped; 0 at the first position.
    pub mi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleField {
    pub width: usize,
    pub height: usize,
    pub s_p: Array2<usize>,
    pub h: Array2<f64>,
    pub mi: Array2<f64>,
}

impl ScaleField {
    pub fn get(&self, x: usize, y: usize) -> ScaleEntry {
        ScaleEntry {
            s_p: self.s_p[[y, x]],
            h: self.h[[y, x]],
            mi: self.mi[[y, x]],
        }
    }

    /// CSV `x,y,s_p,H,MI` in row-major order; `s_p` is written 1-based.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,s_p,H,MI\n");
        for y in 0..self.height {
            for x in 0..self.width {
                let e = self.get(x, y);
                out.push_str(&format!("{x},{y},{},{},{}\n", e.s_p + 1, e.h, e.mi));
            }
        }
        out
    }
}

/// Sufficient statistics of a layer set at one pixel: with total mass `T`,
/// the observer entropy is `log₂T − Σ e log₂e / T` and the searcher
/// cross-entropy `−Σ e log₂q / T`. Zero mass falls back to the uniform
/// distribution.
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    mass: f64,
    /// `Σ e log₂ e` (observer) or `Σ e log₂ q` (searcher).
    weighted: f64,
    /// `Σ log₂ q` (searcher only).
    log_q: f64,
    count: f64,
}

impl Sums {
    fn merge(self, o: Sums) -> Sums {
        Sums {
            mass: self.mass + o.mass,
            weighted: self.weighted + o.weighted,
            log_q: self.log_q + o.log_q,
            count: self.count + o.count,
        }
    }

    fn entropy(&self, searcher: bool) -> f64 {
        match (self.mass > 0.0, searcher) {
            (true, false) => (self.mass.log2() - self.weighted / self.mass).max(0.0),
            (false, false) => self.count.log2(),
            (true, true) => -self.weighted / self.mass,
            (false, true) => -self.log_q / self.count,
        }
    }
}

/// Observer entropy of the inter-band distribution at `(x, y)` over the
/// layers up to depth position `upto_pos`.
pub fn entropy_observer(stack: &SubbandStack, x: usize, y: usize, upto_pos: usize) -> Result<f64> {
    let p = interband_pdf(stack, x, y, upto_pos)?;
    Ok(-p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>())
}

/// Searcher cross-entropy of the inter-band distribution at `(x, y)` against
/// the per-layer GGD densities.
pub fn entropy_searcher(stack: &SubbandStack, table: &GgdTable, x: usize, y: usize, upto_pos: usize) -> Result<f64> {
    let p = interband_pdf(stack, x, y, upto_pos)?;
    let layers = &stack.layers()[..stack.prefix_len(upto_pos)];
    let mut h = 0.0;
    for (pi, layer) in p.iter().zip(layers) {
        let q = ggd_density(table.for_layer(layer)?, layer.at(x, y).sqrt());
        h -= pi * q.log2();
    }
    Ok(h)
}

/// Per-pixel evaluator shared by the public point queries and the map.
struct Scorer<'a> {
    stack: &'a SubbandStack,
    /// `log₂ q` per layer at native resolution (searcher mode only).
    log_q: Option<Vec<Array2<f64>>>,
}

/// Entropy sequences for one pixel, reused across pixels.
struct Scan {
    groups: Vec<Sums>,
    /// `H(M(m))` for every position.
    h_model: Vec<f64>,
    /// `MI(D(m), M(m − 1))`, 0 at position 0.
    mi: Vec<f64>,
}

impl Scan {
    fn new(positions: usize) -> Self {
        Scan {
            groups: Vec::with_capacity(positions),
            h_model: Vec::with_capacity(positions),
            mi: Vec::with_capacity(positions),
        }
    }
}

impl<'a> Scorer<'a> {
    fn new(stack: &'a SubbandStack, table: Option<&GgdTable>) -> Result<Self> {
        let log_q = match table {
            None => None,
            Some(t) => Some(
                stack
                    .layers()
                    .iter()
                    .map(|l| {
                        let params = t.for_layer(l)?;
                        Ok(l.native().mapv(|e| ggd_density(params, e.sqrt()).log2()))
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        Ok(Scorer { stack, log_q })
    }

    fn scan(&self, x: usize, y: usize, out: &mut Scan) {
        let stack = self.stack;
        let layers = stack.layers();
        let searcher = self.log_q.is_some();
        out.groups.clear();
        for pos in 0..stack.positions() {
            let mut sums = Sums::default();
            for k in stack.group(pos) {
                let l = &layers[k];
                let e = l.at(x, y);
                sums.mass += e;
                sums.count += 1.0;
                match &self.log_q {
                    None if e > 0.0 => sums.weighted += e * e.log2(),
                    None => {}
                    Some(grids) => {
                        let lq = grids[k][[y >> l.depth, x >> l.depth]];
                        sums.weighted += e * lq;
                        sums.log_q += lq;
                    }
                }
            }
            out.groups.push(sums);
        }

        out.h_model.clear();
        out.mi.clear();
        let mut model = out.groups[0];
        out.h_model.push(model.entropy(searcher));
        out.mi.push(0.0);
        for m in 1..out.groups.len() {
            let data = out.groups[m];
            let joint = model.merge(data);
            let h_m = out.h_model[m - 1];
            let h_j = joint.entropy(searcher);
            let value = if model.mass > 0.0 && data.mass > 0.0 {
                data.entropy(searcher) + h_m - h_j
            } else {
                0.0
            };
            out.mi.push(value);
            out.h_model.push(h_j);
            model = joint;
        }
    }

    fn entry(&self, scan: &Scan, rule: ScaleRule) -> ScaleEntry {
        let s_p = match rule {
            ScaleRule::Wss => select_position(&scan.h_model),
            ScaleRule::Dis => 1 + select_position(&scan.mi[1..]),
        };
        ScaleEntry {
            s_p,
            h: scan.h_model[s_p],
            mi: scan.mi[s_p],
        }
    }
}

fn check_point(stack: &SubbandStack, x: usize, y: usize) -> Result<()> {
    stack.check_pixel(x, y)?;
    if stack.positions() < 2 {
        return Err(Error::param(format!(
            "scale selection needs at least 2 depth positions, stack has {}",
            stack.positions()
        )));
    }
    Ok(())
}

/// `MI(D(model_pos + 1), M(model_pos)) = H(D) + H(M) − H(D, M)`, each term
/// with its own normalization. Searcher mode when `table` is given. Defined
/// as 0 when either side carries no energy at `(x, y)`.
pub fn mutual_information(
    stack: &SubbandStack,
    table: Option<&GgdTable>,
    x: usize,
    y: usize,
    model_pos: usize,
) -> Result<f64> {
    stack.check_pixel(x, y)?;
    stack.check_position(model_pos + 1)?;
    let mut scan = Scan::new(stack.positions());
    Scorer::new(stack, table)?.scan(x, y, &mut scan);
    Ok(scan.mi[model_pos + 1])
}

/// Index of the first strict interior peak of `values`; without one, the
/// argmax with ties going to the last (coarsest) index.
pub fn select_position(values: &[f64]) -> usize {
    assert!(!values.is_empty(), "scale selection over an empty sequence");
    if let Some(m) = (1..values.len().saturating_sub(1)).find(|&m| values[m - 1] < values[m] && values[m] > values[m + 1]) {
        return m;
    }
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v >= values[best] {
            best = i;
        }
    }
    best
}

/// Characteristic scale at `(x, y)`. WSS peaks `H(M(·))` over all positions;
/// DIS peaks the unclamped MI over positions 1.. .
pub fn select_scale(
    stack: &SubbandStack,
    table: Option<&GgdTable>,
    rule: ScaleRule,
    x: usize,
    y: usize,
) -> Result<ScaleEntry> {
    check_point(stack, x, y)?;
    let scorer = Scorer::new(stack, table)?;
    let mut scan = Scan::new(stack.positions());
    scorer.scan(x, y, &mut scan);
    Ok(scorer.entry(&scan, rule))
}

/// Decomposition used by `config`.
pub fn decompose(image: &Image, config: &SaliencyConfig, filters: &FilterLibrary) -> Result<DecompositionTree> {
    let levels = config.levels;
    match config.transform_kind {
        TransformKind::Dwt => dwt2(image, &filters.bank(&config.bank)?, levels),
        TransformKind::Dwptbb => Ok(best_basis(&dwpt_full(image, &filters.bank(&config.bank)?, levels)?)),
        TransformKind::Qwt => qwt2(image, &filters.dual_tree()?, levels),
        TransformKind::Qwptbb => qwpt_best_basis(image, &filters.dual_tree()?, levels),
    }
}

/// Saliency map with filters from the built-in asset, or the directory named
/// by `WAVESAL_FILTER_DIR` when set.
pub fn compute_map(image: &Image, config: &SaliencyConfig) -> Result<(SaliencyMap, ScaleField)> {
    compute_map_with(image, config, &FilterLibrary::from_env()?)
}

/// `Y = H(M(s_p)) · MI(D(s_p), M(s_p − 1))` per pixel, then optional Gaussian
/// smoothing and affine normalization to `[0, 1]`.
///
/// A decomposition with fewer than two depth positions carrying detail
/// energy (e.g. a best basis that keeps the root) yields an all-zero map.
pub fn compute_map_with(image: &Image, config: &SaliencyConfig, filters: &FilterLibrary) -> Result<(SaliencyMap, ScaleField)> {
    config.validate()?;
    let tree = decompose(image, config, filters)?;
    let stack = energy_stack(&tree);
    let (w, h) = (image.width(), image.height());
    let tag = config.method_tag();
    let digest = config.params_digest();

    if stack.positions() < 2 {
        let field = ScaleField {
            width: w,
            height: h,
            s_p: Array2::zeros((h, w)),
            h: Array2::zeros((h, w)),
            mi: Array2::zeros((h, w)),
        };
        return Ok((SaliencyMap::new(Array2::zeros((h, w)), tag, digest)?, field));
    }

    let table = match config.mode {
        Mode::Observer => None,
        Mode::Searcher => Some(GgdTable::fit(&tree)),
    };
    let scorer = Scorer::new(&stack, table.as_ref())?;
    let rows: Vec<Vec<(ScaleEntry, f64)>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut scan = Scan::new(stack.positions());
            (0..w)
                .map(|x| {
                    scorer.scan(x, y, &mut scan);
                    let e = scorer.entry(&scan, config.scale_rule);
                    let mi = if config.clamp_negative_mi { e.mi.max(0.0) } else { e.mi };
                    (e, (e.h * mi).max(0.0))
                })
                .collect()
        })
        .collect();

    let mut field = ScaleField {
        width: w,
        height: h,
        s_p: Array2::zeros((h, w)),
        h: Array2::zeros((h, w)),
        mi: Array2::zeros((h, w)),
    };
    let mut values = Array2::zeros((h, w));
    for (y, row) in rows.into_iter().enumerate() {
        for (x, (e, v)) in row.into_iter().enumerate() {
            field.s_p[[y, x]] = e.s_p;
            field.h[[y, x]] = e.h;
            field.mi[[y, x]] = e.mi;
            values[[y, x]] = v;
        }
    }
    if config.smoothing_sigma > 0.0 {
        values = gaussian_smooth(&values, config.smoothing_sigma);
    }
    normalize_unit(&mut values);
    Ok((SaliencyMap::new(values, tag, digest)?, field))
}

/// Separable Gaussian blur, kernel radius `⌈3σ⌉`, borders clamped.
pub fn gaussian_smooth(values: &Array2<f64>, sigma: f64) -> Array2<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let (h, w) = values.dim();
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let rows = Array2::from_shape_fn((h, w), |(y, x)| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, c)| c * values[[y, clamp(x as isize + k as isize - radius, w)]])
            .sum::<f64>()
    });
    Array2::from_shape_fn((h, w), |(y, x)| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, c)| c * rows[[clamp(y as isize + k as isize - radius, h), x]])
            .sum::<f64>()
    })
}

/// Affine map of `values` onto `[0, 1]`; a constant array becomes zeros.
pub fn normalize_unit(values: &mut Array2<f64>) {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi > lo {
        values.mapv_inplace(|v| (v - lo) / (hi - lo));
    } else {
        values.fill(0.0);
    }
}
