//! Image input, fixation ground truth and map output.
//!
//! Inputs are decoded into a normalized grayscale [`Image`] (row-major,
//! values in `[0, 1]`). RGB sources are reduced to luminance with the
//! BT.601 weights. Fixations come from a two-column `x,y` CSV and are
//! clamped into the image frame. Maps are written as 8-bit binary PGM with a
//! `key=value` sidecar holding the provenance and the pre-rescale range.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat};
use ndarray::Array2;

use crate::error::{Error, Result};

const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

/// Grayscale raster with intensities in `[0, 1]`, indexed `[y, x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    data: Array2<f64>,
}

impl Image {
    /// Builds an image from row-major values.
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("image dimensions must be nonzero"));
        }
        if values.len() != width * height {
            return Err(Error::param(format!(
                "expected {} values for a {width}x{height} image, got {}",
                width * height,
                values.len()
            )));
        }
        let data = Array2::from_shape_vec((height, width), values)
            .map_err(|e| Error::param(e.to_string()))?;
        Self::from_array(data)
    }

    /// Wraps an `[y, x]` array; every value must lie in `[0, 1]`.
    pub fn from_array(data: Array2<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::param("image dimensions must be nonzero"));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::param(format!(
                "intensity {bad} outside [0, 1]"
            )));
        }
        Ok(Image { data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::from_array(Array2::from_shape_fn((height, width), |(y, x)| f(x, y)))
    }

    pub fn width(&self) -> usize {
        self.data.ncols()
    }

    pub fn height(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[[y, x]]
    }

    pub fn pixels(&self) -> &Array2<f64> {
        &self.data
    }

    /// Sum of squared intensities.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Ground-truth gaze points for one image, already clamped to its frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixationSet {
    pub image_id: String,
    pub points: Vec<(usize, usize)>,
}

impl FixationSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

/// Nonnegative per-pixel saliency plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    values: Array2<f64>,
    pub method_tag: String,
    pub params_digest: String,
}

impl SaliencyMap {
    pub fn new(values: Array2<f64>, method_tag: impl Into<String>, params_digest: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("saliency map dimensions must be nonzero"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::param(format!("saliency value {bad} is not finite and nonnegative")));
        }
        Ok(SaliencyMap {
            values,
            method_tag: method_tag.into(),
            params_digest: params_digest.into(),
        })
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn height(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[[y, x]]
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Reads an 8-bit PGM (P2/P5) or PNG (gray, gray+alpha, RGB, RGBA).
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

/// Decodes in-memory PGM or PNG bytes.
pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    let format = image::guess_format(bytes).map_err(|_| Error::Format {
        format: "unknown".into(),
        detail: "not a PGM or PNG stream".into(),
    })?;
    let name = match format {
        ImageFormat::Png => "PNG",
        ImageFormat::Pnm => "PGM",
        other => {
            return Err(Error::Format {
                format: format!("{other:?}"),
                detail: "only PGM and PNG inputs are supported".into(),
            })
        }
    };
    if format == ImageFormat::Pnm && !(bytes.starts_with(b"P2") || bytes.starts_with(b"P5")) {
        return Err(Error::Format {
            format: name.into(),
            detail: "only graymap variants P2 and P5 are supported".into(),
        });
    }
    let decoded = image::load_from_memory_with_format(bytes, format).map_err(|e| Error::Format {
        format: name.into(),
        detail: e.to_string(),
    })?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let values: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(|v| f64::from(v) / 255.0).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| f64::from(p.0[0]) / 255.0).collect(),
        DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| luminance(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(buf) => buf.pixels().map(|p| luminance(p.0[0], p.0[1], p.0[2])).collect(),
        other => {
            return Err(Error::Format {
                format: name.into(),
                detail: format!("unsupported bit depth or color type {:?}", other.color()),
            })
        }
    };
    Image::new(w, h, values)
}

fn luminance(r: u8, g: u8, b: u8) -> f64 {
    let y = LUMA_R * f64::from(r) + LUMA_G * f64::from(g) + LUMA_B * f64::from(b);
    (y / 255.0).clamp(0.0, 1.0)
}

/// Reads an `x,y` fixation CSV for `image`. Points outside the frame are
/// clamped to the nearest valid pixel; fractional coordinates are rounded.
pub fn load_fixations(path: impl AsRef<Path>, image: &Image) -> Result<FixationSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let image_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_fixations(&text, image_id, image.width(), image.height())
}

pub fn parse_fixations(text: &str, image_id: String, width: usize, height: usize) -> Result<FixationSet> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if is_header(header) => {}
        Some((_, header)) => {
            return Err(Error::Parse {
                line: 1,
                detail: format!("expected header `x,y`, found `{}`", header.trim()),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                detail: "missing header `x,y`".into(),
            })
        }
    }
    let mut points = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let (Some(xs), Some(ys), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse {
                line: line_no,
                detail: format!("expected two fields, found `{line}`"),
            });
        };
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    detail: format!("non-numeric coordinate `{s}`"),
                })
        };
        let (x, y) = (parse(xs)?, parse(ys)?);
        points.push((clamp_coord(x, width), clamp_coord(y, height)));
    }
    Ok(FixationSet { image_id, points })
}

fn is_header(line: &str) -> bool {
    let cols: Vec<String> = line.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
    cols == ["x", "y"]
}

fn clamp_coord(v: f64, extent: usize) -> usize {
    let max = (extent - 1) as f64;
    v.round().clamp(0.0, max) as usize
}

/// Sidecar path for a written map: the map path with a `.txt` extension.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("txt")
}

/// Rescales `[min, max]` to `[0, 255]` with round-half-up. Constant maps
/// become all zeros.
pub fn quantize_map(map: &SaliencyMap) -> Vec<u8> {
    let (lo, hi) = map.min_max();
    let span = hi - lo;
    map.values()
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect()
}

/// Writes `map` as binary PGM plus its metadata sidecar.
pub fn write_map(map: &SaliencyMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = format!("P5\n{} {}\n255\n", map.width(), map.height()).into_bytes();
    bytes.extend(quantize_map(map));
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;

    let (lo, hi) = map.min_max();
    let mut meta = String::new();
    let _ = writeln!(meta, "method_tag={}", map.method_tag);
    let _ = writeln!(meta, "params_digest={}", map.params_digest);
    let _ = writeln!(meta, "min={lo}");
    let _ = writeln!(meta, "max={hi}");
    let side = sidecar_path(path);
    fs::write(&side, meta).map_err(|e| Error::io(side, e))
}
