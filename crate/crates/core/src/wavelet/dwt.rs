use ndarray::{s, Array2};

use super::{check_levels, scaled_len, Coeffs, DecompositionTree, FilterBank, SubbandNode, TransformKind};
use crate::error::{Error, Result};
use crate::imagedata::Image;

/// Extends odd sides periodically by one sample.
fn pad_even(grid: &Array2<f64>) -> Array2<f64> {
    let (h, w) = grid.dim();
    if h % 2 == 0 && w % 2 == 0 {
        return grid.clone();
    }
    let (ph, pw) = (h + h % 2, w + w % 2);
    Array2::from_shape_fn((ph, pw), |(y, x)| grid[[y % h, x % w]])
}

/// One separable analysis level: rows with `xbank`, then columns with
/// `ybank`. Returns `[LL, LH, HL, HH]` (x band first).
pub fn split2(grid: &Array2<f64>, xbank: &FilterBank, ybank: &FilterBank) -> [Array2<f64>; 4] {
    let padded = pad_even(grid);
    let (h, w) = padded.dim();
    let (hh, hw) = (h / 2, w / 2);

    let mut lo_x = Array2::zeros((h, hw));
    let mut hi_x = Array2::zeros((h, hw));
    let mut lo = vec![0.0; hw];
    let mut hi = vec![0.0; hw];
    let mut line = vec![0.0; w];
    for y in 0..h {
        line.iter_mut().zip(padded.row(y)).for_each(|(d, s)| *d = *s);
        xbank.analyze(&line, &mut lo, &mut hi);
        lo_x.row_mut(y).iter_mut().zip(&lo).for_each(|(d, s)| *d = *s);
        hi_x.row_mut(y).iter_mut().zip(&hi).for_each(|(d, s)| *d = *s);
    }

    let mut out: [Array2<f64>; 4] = std::array::from_fn(|_| Array2::zeros((hh, hw)));
    let mut col = vec![0.0; h];
    let mut lo = vec![0.0; hh];
    let mut hi = vec![0.0; hh];
    for (src, (lo_idx, hi_idx)) in [(&lo_x, (0, 1)), (&hi_x, (2, 3))] {
        for x in 0..hw {
            col.iter_mut().zip(src.column(x)).for_each(|(d, s)| *d = *s);
            ybank.analyze(&col, &mut lo, &mut hi);
            out[lo_idx].column_mut(x).iter_mut().zip(&lo).for_each(|(d, s)| *d = *s);
            out[hi_idx].column_mut(x).iter_mut().zip(&hi).for_each(|(d, s)| *d = *s);
        }
    }
    out
}

/// Inverse of [`split2`], cropped back to `width × height`.
pub fn merge2(
    bands: [&Array2<f64>; 4],
    xbank: &FilterBank,
    ybank: &FilterBank,
    width: usize,
    height: usize,
) -> Array2<f64> {
    let (hh, hw) = bands[0].dim();
    let (h, w) = (2 * hh, 2 * hw);

    let mut lo_x = Array2::zeros((h, hw));
    let mut hi_x = Array2::zeros((h, hw));
    let mut col = vec![0.0; h];
    for (dst, (lo_idx, hi_idx)) in [(&mut lo_x, (0, 1)), (&mut hi_x, (2, 3))] {
        for x in 0..hw {
            let lo: Vec<f64> = bands[lo_idx].column(x).to_vec();
            let hi: Vec<f64> = bands[hi_idx].column(x).to_vec();
            ybank.synthesize(&lo, &hi, &mut col);
            dst.column_mut(x).iter_mut().zip(&col).for_each(|(d, s)| *d = *s);
        }
    }

    let mut full = Array2::zeros((h, w));
    let mut line = vec![0.0; w];
    for y in 0..h {
        let lo: Vec<f64> = lo_x.row(y).to_vec();
        let hi: Vec<f64> = hi_x.row(y).to_vec();
        xbank.synthesize(&lo, &hi, &mut line);
        full.row_mut(y).iter_mut().zip(&line).for_each(|(d, s)| *d = *s);
    }
    full.slice(s![..height, ..width]).to_owned()
}

/// 2-D DWT with one bank on both axes at every level.
pub fn dwt2(image: &Image, bank: &FilterBank, levels: usize) -> Result<DecompositionTree> {
    let schedule = vec![(bank, bank); levels];
    dwt2_scheduled(image, &schedule)
}

/// 2-D DWT where level `l` (1-based) filters rows with `schedule[l-1].0`
/// and columns with `schedule[l-1].1`.
pub fn dwt2_scheduled(image: &Image, schedule: &[(&FilterBank, &FilterBank)]) -> Result<DecompositionTree> {
    let levels = schedule.len();
    check_levels(image.width(), image.height(), levels)?;
    let mut nodes = Vec::with_capacity(3 * levels);
    let mut approx = image.pixels().clone();
    for (level, (xb, yb)) in schedule.iter().enumerate() {
        let depth = level + 1;
        let [ll, lh, hl, hh] = split2(&approx, xb, yb);
        for (idx, band) in [(1, lh), (2, hl), (3, hh)] {
            nodes.push(SubbandNode::new(depth, idx, Coeffs::Real(band)));
        }
        approx = ll;
    }
    Ok(DecompositionTree {
        kind: TransformKind::Dwt,
        levels,
        width: image.width(),
        height: image.height(),
        nodes,
        approx: SubbandNode::new(levels, 0, Coeffs::Real(approx)),
    })
}

/// Inverse of [`dwt2`]. Test support: reconstruction is not part of the
/// saliency pipeline.
#[doc(hidden)]
pub fn idwt2(tree: &DecompositionTree, bank: &FilterBank) -> Result<Array2<f64>> {
    let real = |n: &SubbandNode| match &n.coeffs {
        Coeffs::Real(g) => Ok(g.clone()),
        Coeffs::Quat(_) => Err(Error::Kind("idwt2 needs a single-tree decomposition".into())),
    };
    if tree.kind != TransformKind::Dwt {
        return Err(Error::Kind(format!("idwt2 cannot invert a {} tree", tree.kind)));
    }
    let mut approx = real(&tree.approx)?;
    for depth in (1..=tree.levels).rev() {
        let band = |idx| {
            tree.node(depth, idx)
                .ok_or_else(|| Error::param(format!("missing node ({depth}, {idx})")))
                .and_then(real)
        };
        let (lh, hl, hh) = (band(1)?, band(2)?, band(3)?);
        approx = merge2(
            [&approx, &lh, &hl, &hh],
            bank,
            bank,
            scaled_len(tree.width, depth - 1),
            scaled_len(tree.height, depth - 1),
        );
    }
    Ok(approx)
}
