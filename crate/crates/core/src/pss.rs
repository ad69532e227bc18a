//! Pixel-histogram scale saliency baseline.
//!
//! At each pixel and radius `s` the intensities inside the disk `d² ≤ s²`
//! (clipped at the border) are binned over `[0, 1]`. `H(s)` is the Shannon
//! entropy of that histogram in bits and `W(s) = s²/(2s−1) · Σ|p_s − p_{s−1}|`.
//! Every interior peak of `H` over `s_min..=s_max` contributes `H(s)·W(s)`.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagedata::{Image, SaliencyMap};
use crate::saliency::hex_digest;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PssConfig {
    pub s_min: usize,
    pub s_max: usize,
    pub bins: usize,
}

impl Default for PssConfig {
    fn default() -> Self {
        PssConfig { s_min: 3, s_max: 20, bins: 16 }
    }
}

impl PssConfig {
    pub fn validate(&self) -> Result<()> {
        if self.s_min < 1 || self.s_min >= self.s_max {
            return Err(Error::param(format!(
                "radii must satisfy 1 <= s_min < s_max, got {}..{}",
                self.s_min, self.s_max
            )));
        }
        if self.bins < 2 {
            return Err(Error::param(format!("need at least 2 bins, got {}", self.bins)));
        }
        Ok(())
    }

    pub fn canonical(&self) -> String {
        format!("method=pss;s_min={};s_max={};bins={}", self.s_min, self.s_max, self.bins)
    }
}

/// Entropy and inter-scale change at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSample {
    pub s: usize,
    pub h: f64,
    pub w: f64,
}

/// Histogram bin of an intensity in `[0, 1]`.
pub fn bin_of(v: f64, bins: usize) -> usize {
    ((v * bins as f64).floor() as usize).min(bins - 1)
}

/// Offsets grouped into rings: `rings[k]` holds the points with
/// `r_{k-1}² < d² ≤ r_k²` for radii `r_k = s_min − 1 + k` (ring 0 is the
/// whole innermost disk).
fn rings(config: &PssConfig) -> Vec<Vec<(isize, isize)>> {
    let first = config.s_min - 1;
    let reach = config.s_max as isize;
    let mut rings = vec![Vec::new(); config.s_max - first + 1];
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let d2 = (dx * dx + dy * dy) as usize;
            if d2 > config.s_max * config.s_max {
                continue;
            }
            // smallest radius r with d² ≤ r²
            let r = (first..=config.s_max).find(|r| d2 <= r * r).unwrap();
            rings[r - first].push((dx, dy));
        }
    }
    rings
}

/// Entropy in bits, summed over the counts in sorted order so that any
/// permutation of the bins gives a bit-identical result.
fn entropy(counts: &[u32], n: u32, scratch: &mut Vec<u32>) -> f64 {
    scratch.clear();
    scratch.extend(counts.iter().copied().filter(|&c| c > 0));
    scratch.sort_unstable();
    let n = n as f64;
    -scratch
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

/// `Σ |p − q|` for histograms `a/na` and `b/nb`, from exact integer
/// cross-products.
fn l1_distance(a: &[u32], na: u32, b: &[u32], nb: u32) -> f64 {
    let num: u64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x as u64 * nb as u64).abs_diff(y as u64 * na as u64))
        .sum();
    num as f64 / (na as u64 * nb as u64) as f64
}

struct Grid {
    bins: Array2<usize>,
    width: isize,
    height: isize,
}

impl Grid {
    fn new(image: &Image, nbins: usize) -> Self {
        Grid {
            bins: image.pixels().mapv(|v| bin_of(v, nbins)),
            width: image.width() as isize,
            height: image.height() as isize,
        }
    }

    fn profile(&self, config: &PssConfig, rings: &[Vec<(isize, isize)>], x: usize, y: usize) -> Vec<ScaleSample> {
        let mut counts = vec![0u32; config.bins];
        let mut prev = vec![0u32; config.bins];
        let mut scratch = Vec::with_capacity(config.bins);
        let (mut n, mut prev_n) = (0u32, 0u32);
        let mut out = Vec::with_capacity(rings.len());
        for (k, ring) in rings.iter().enumerate() {
            for &(dx, dy) in ring {
                let (px, py) = (x as isize + dx, y as isize + dy);
                if px >= 0 && py >= 0 && px < self.width && py < self.height {
                    counts[self.bins[[py as usize, px as usize]]] += 1;
                    n += 1;
                }
            }
            let s = config.s_min - 1 + k;
            let w = if k == 0 {
                0.0
            } else {
                let sf = s as f64;
                sf * sf / (2.0 * sf - 1.0) * l1_distance(&counts, n, &prev, prev_n)
            };
            out.push(ScaleSample { s, h: entropy(&counts, n, &mut scratch), w });
            prev.copy_from_slice(&counts);
            prev_n = n;
        }
        out
    }
}

/// `H` and `W` at `(x, y)` for every radius `s_min − 1 ..= s_max`. The first
/// entry only seeds the differences and its `w` is 0.
pub fn pss_profile(image: &Image, config: &PssConfig, x: usize, y: usize) -> Result<Vec<ScaleSample>> {
    config.validate()?;
    if x >= image.width() || y >= image.height() {
        return Err(Error::param(format!("pixel ({x}, {y}) outside the image")));
    }
    Ok(Grid::new(image, config.bins).profile(config, &rings(config), x, y))
}

fn peak_indices(profile: &[ScaleSample]) -> impl Iterator<Item = usize> + '_ {
    (1..profile.len().saturating_sub(1)).filter(|&k| profile[k - 1].h < profile[k].h && profile[k].h > profile[k + 1].h)
}

/// Radii of the strict interior peaks of `H`. The seed radius `s_min − 1`
/// can only serve as a left neighbour.
pub fn entropy_peaks(profile: &[ScaleSample]) -> Vec<usize> {
    peak_indices(profile).map(|k| profile[k].s).collect()
}

fn pixel_saliency(profile: &[ScaleSample]) -> f64 {
    peak_indices(profile).map(|k| profile[k].h * profile[k].w).sum()
}

/// Dense baseline map: `Σ H(s)·W(s)` over each pixel's entropy peaks, 0
/// where `H` has none. Values are left unnormalized.
pub fn pss_map(image: &Image, config: &PssConfig) -> Result<SaliencyMap> {
    config.validate()?;
    let grid = Grid::new(image, config.bins);
    let rings = rings(config);
    let (w, h) = (image.width(), image.height());
    let rows: Vec<Vec<f64>> = (0..h)
        .into_par_iter()
        .map(|y| (0..w).map(|x| pixel_saliency(&grid.profile(config, &rings, x, y))).collect())
        .collect();
    let values = Array2::from_shape_fn((h, w), |(y, x)| rows[y][x]);
    SaliencyMap::new(values, "pss", hex_digest(&config.canonical()))
}
