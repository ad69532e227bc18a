//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavesal::wavelet::{node_cost, FilterBank, PacketTree, Tiling};
use wavesal::Image;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(w: usize, h: usize, seed: u64) -> Image {
    let mut r = rng(seed);
    Image::from_fn(w, h, |_, _| r.random::<f64>()).unwrap()
}

/// One analysis level as a direct 2-D circular correlation: band
/// `2·xh + yh` at `(x', y')` is `Σ_a Σ_b fx[a] fy[b] img[(2y'+b) mod h, (2x'+a) mod w]`.
/// Inputs must have even sides.
pub fn split_oracle(img: &Array2<f64>, bank: &FilterBank) -> [Array2<f64>; 4] {
    let (h, w) = img.dim();
    std::array::from_fn(|band| {
        let fx = if band & 2 != 0 { &bank.hi_a } else { &bank.lo_a };
        let fy = if band & 1 != 0 { &bank.hi_a } else { &bank.lo_a };
        Array2::from_shape_fn((h / 2, w / 2), |(yo, xo)| {
            let mut acc = 0.0;
            for (a, ca) in fx.iter().enumerate() {
                for (b, cb) in fy.iter().enumerate() {
                    acc += ca * cb * img[[(2 * yo + b) % h, (2 * xo + a) % w]];
                }
            }
            acc
        })
    })
}

pub type Band = (usize, usize, Array2<f64>);

/// Multi-level DWT oracle: `(depth, node_index, coefficients)` for every
/// detail band, plus the final approximation.
pub fn dwt_oracle(img: &Image, bank: &FilterBank, levels: usize) -> (Vec<Band>, Array2<f64>) {
    let mut approx = img.pixels().clone();
    let mut details = Vec::new();
    for depth in 1..=levels {
        let [ll, lh, hl, hh] = split_oracle(&approx, bank);
        details.push((depth, 1, lh));
        details.push((depth, 2, hl));
        details.push((depth, 3, hh));
        approx = ll;
    }
    (details, approx)
}

/// Every complete tiling of the packet tree below `(depth, index)`.
pub fn all_tilings(levels: usize, depth: usize, index: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![vec![(depth, index)]];
    if depth < levels {
        let kids: Vec<_> = (0..4).map(|k| all_tilings(levels, depth + 1, 4 * index + k)).collect();
        for a in &kids[0] {
            for b in &kids[1] {
                for c in &kids[2] {
                    for d in &kids[3] {
                        out.push([a.as_slice(), b, c, d].concat());
                    }
                }
            }
        }
    }
    out
}

/// Minimum cost over every complete tiling, each summed in `(depth, index)` order.
pub fn exhaustive_min_cost(tree: &PacketTree) -> f64 {
    all_tilings(tree.levels, 0, 0)
        .into_iter()
        .map(|nodes| Tiling::new(tree.levels, nodes).cost(tree))
        .fold(f64::INFINITY, f64::min)
}

/// Direct sum of node costs (no DP).
pub fn tiling_cost_direct(tree: &PacketTree, nodes: &[(usize, usize)]) -> f64 {
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    sorted.iter().map(|&(d, i)| node_cost(tree.node(d, i), tree.root_energy())).sum()
}

/// Mann–Whitney AUC: pairs where the positive wins count 1, ties 1/2.
pub fn mann_whitney(map: &Array2<f64>, fixated: &[(usize, usize)]) -> f64 {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for ((y, x), &v) in map.indexed_iter() {
        if fixated.contains(&(x, y)) {
            pos.push(v);
        } else {
            neg.push(v);
        }
    }
    let mut twice: u64 = 0;
    for p in &pos {
        for n in &neg {
            twice += if p > n {
                2
            } else if p == n {
                1
            } else {
                0
            };
        }
    }
    twice as f64 / (2 * pos.len() * neg.len()) as f64
}

/// `−Σ p log₂ p` of `energies` after normalization; uniform when all zero.
pub fn entropy_bits(energies: &[f64]) -> f64 {
    let total: f64 = energies.iter().sum();
    if total == 0.0 {
        return (energies.len() as f64).log2();
    }
    -energies
        .iter()
        .filter(|&&e| e > 0.0)
        .map(|e| {
            let p = e / total;
            p * p.log2()
        })
        .sum::<f64>()
}

pub fn binary_entropy(q: f64) -> f64 {
    let t = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    t(q) + t(1.0 - q)
}

/// Laplacian samples with unit scale: random sign times Exp(1).
pub fn laplace_samples(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let u: f64 = r.random::<f64>();
            let e = -(1.0 - u).ln();
            if r.random::<bool>() {
                e
            } else {
                -e
            }
        })
        .collect()
}

pub fn gaussian_samples(n: usize, seed: u64) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut r = rng(seed);
    (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
}
