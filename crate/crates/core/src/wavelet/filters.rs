//! Filter banks and the coefficient asset they are loaded from.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use crate::error::{Error, Result};

/// Environment variable naming a directory that holds a replacement
/// `filters.txt`.
pub const FILTER_DIR_ENV: &str = "WAVESAL_FILTER_DIR";

pub const FILTER_FILE: &str = "filters.txt";

const BUILTIN: &str = include_str!("../../assets/filters.txt");

/// Expected tree-g minus tree-h group delay of the later-stage low-pass pair.
pub const HILBERT_DELAY: f64 = 0.51;
pub const HILBERT_DELAY_TOL: f64 = 0.05;

/// Two-channel analysis/synthesis bank.
///
/// Analysis is periodic correlation followed by dyadic downsampling,
/// `lo[k] = Σ_j lo_a[j] · x[(2k + j) mod n]`. Synthesis is the adjoint of the
/// same operator built from the synthesis filters, so an orthonormal bank
/// (synthesis = analysis) reconstructs exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub name: String,
    pub lo_a: Vec<f64>,
    pub hi_a: Vec<f64>,
    pub lo_s: Vec<f64>,
    pub hi_s: Vec<f64>,
    orthonormal: bool,
}

impl FilterBank {
    /// Conjugate-quadrature bank from its low-pass filter:
    /// `hi[k] = (-1)^k · lo[L-1-k]`.
    pub fn orthonormal(name: impl Into<String>, lo: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if lo.len() < 2 || !lo.len().is_multiple_of(2) {
            return Err(Error::Filter(format!("{name}: orthonormal low-pass needs an even tap count")));
        }
        let norm = lo.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Filter(format!("{name}: low-pass norm {norm} is not 1")));
        }
        let n = lo.len();
        let hi: Vec<f64> = (0..n)
            .map(|k| if k % 2 == 0 { lo[n - 1 - k] } else { -lo[n - 1 - k] })
            .collect();
        Ok(FilterBank {
            name,
            lo_s: lo.clone(),
            hi_s: hi.clone(),
            lo_a: lo,
            hi_a: hi,
            orthonormal: true,
        })
    }

    pub fn biorthogonal(
        name: impl Into<String>,
        lo_a: Vec<f64>,
        hi_a: Vec<f64>,
        lo_s: Vec<f64>,
        hi_s: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if [&lo_a, &hi_a, &lo_s, &hi_s].iter().any(|f| f.is_empty()) {
            return Err(Error::Filter(format!("{name}: empty filter")));
        }
        Ok(FilterBank {
            name,
            lo_a,
            hi_a,
            lo_s,
            hi_s,
            orthonormal: false,
        })
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    /// One analysis step on a periodic signal of even length.
    pub fn analyze(&self, x: &[f64], lo: &mut [f64], hi: &mut [f64]) {
        correlate_down(&self.lo_a, x, lo);
        correlate_down(&self.hi_a, x, hi);
    }

    /// Inverse of [`FilterBank::analyze`].
    pub fn synthesize(&self, lo: &[f64], hi: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        adjoint_up(&self.lo_s, lo, out);
        adjoint_up(&self.hi_s, hi, out);
    }
}

fn correlate_down(f: &[f64], x: &[f64], out: &mut [f64]) {
    let n = x.len();
    for (k, o) in out.iter_mut().enumerate() {
        let base = 2 * k;
        *o = f.iter().enumerate().map(|(j, c)| c * x[(base + j) % n]).sum();
    }
}

fn adjoint_up(f: &[f64], coeffs: &[f64], out: &mut [f64]) {
    let n = out.len();
    for (k, &c) in coeffs.iter().enumerate() {
        let base = 2 * k;
        for (j, t) in f.iter().enumerate() {
            out[(base + j) % n] += c * t;
        }
    }
}

/// Filters for the dual-tree (quaternion) transforms: one pair for the first
/// level and a Q-shift pair for every later level.
#[derive(Debug, Clone, PartialEq)]
pub struct DualTreeFilterSet {
    pub first_stage_h: FilterBank,
    pub first_stage_g: FilterBank,
    pub later_h: FilterBank,
    pub later_g: FilterBank,
}

impl DualTreeFilterSet {
    /// Checks the half-sample delay between the later-stage low-pass filters.
    pub fn new(
        first_stage_h: FilterBank,
        first_stage_g: FilterBank,
        later_h: FilterBank,
        later_g: FilterBank,
    ) -> Result<Self> {
        let set = DualTreeFilterSet {
            first_stage_h,
            first_stage_g,
            later_h,
            later_g,
        };
        let gap = set.hilbert_delay_gap();
        if (gap - HILBERT_DELAY).abs() > HILBERT_DELAY_TOL {
            return Err(Error::Filter(format!(
                "later-stage pair is not a Hilbert pair: group-delay gap {gap:.4} samples"
            )));
        }
        Ok(set)
    }

    /// Mean group-delay difference `τ_g − τ_h` of the later-stage low-pass
    /// filters over the passband `(0, π/2]`.
    pub fn hilbert_delay_gap(&self) -> f64 {
        const SAMPLES: usize = 512;
        (1..=SAMPLES)
            .map(|i| {
                let w = FRAC_PI_2 * i as f64 / SAMPLES as f64;
                group_delay(&self.later_g.lo_a, w) - group_delay(&self.later_h.lo_a, w)
            })
            .sum::<f64>()
            / SAMPLES as f64
    }
}

/// Group delay `Re(Σ k h[k] e^{-iωk} / Σ h[k] e^{-iωk})` in samples.
pub fn group_delay(h: &[f64], w: f64) -> f64 {
    let (mut re, mut im, mut kre, mut kim) = (0.0, 0.0, 0.0, 0.0);
    for (k, &c) in h.iter().enumerate() {
        let (s, co) = (w * k as f64).sin_cos();
        re += c * co;
        im -= c * s;
        kre += k as f64 * c * co;
        kim -= k as f64 * c * s;
    }
    (kre * re + kim * im) / (re * re + im * im)
}

/// Named filters parsed from the `name: c0 c1 ... cn` asset format.
#[derive(Debug, Clone, Default)]
pub struct FilterLibrary {
    filters: BTreeMap<String, Vec<f64>>,
}

impl FilterLibrary {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("bundled filter asset is well formed")
    }

    /// The bundled asset, or `$WAVESAL_FILTER_DIR/filters.txt` when set.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(FILTER_DIR_ENV) {
            Some(dir) => Self::from_dir(Path::new(&dir)),
            None => Ok(Self::builtin()),
        }
    }

    pub fn from_dir(dir: &Path) -> Result<Self> {
        let path = dir.join(FILTER_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut filters = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, coeffs) = line.split_once(':').ok_or_else(|| Error::Parse {
                line: idx + 1,
                detail: "expected `name: c0 c1 ...`".into(),
            })?;
            let coeffs = coeffs
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map_err(|_| Error::Parse {
                        line: idx + 1,
                        detail: format!("bad coefficient `{t}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if coeffs.is_empty() {
                return Err(Error::Parse {
                    line: idx + 1,
                    detail: format!("filter `{}` has no coefficients", name.trim()),
                });
            }
            filters.insert(name.trim().to_string(), coeffs);
        }
        Ok(FilterLibrary { filters })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.filters.keys().map(String::as_str)
    }

    pub fn coefficients(&self, name: &str) -> Option<&[f64]> {
        self.filters.get(name).map(Vec::as_slice)
    }

    /// Resolves a bank: `name.lo_a`/`hi_a`/`lo_s`/`hi_s` for biorthogonal
    /// banks, or a bare `name` low-pass for orthonormal ones.
    pub fn bank(&self, name: &str) -> Result<FilterBank> {
        let part = |p: &str| self.filters.get(&format!("{name}.{p}")).cloned();
        if let Some(lo_a) = part("lo_a") {
            let missing = || Error::Filter(format!("{name}: incomplete biorthogonal bank"));
            return FilterBank::biorthogonal(
                name,
                lo_a,
                part("hi_a").ok_or_else(missing)?,
                part("lo_s").ok_or_else(missing)?,
                part("hi_s").ok_or_else(missing)?,
            );
        }
        let lo = self
            .filters
            .get(name)
            .ok_or_else(|| Error::Filter(format!("unknown filter bank `{name}`")))?;
        FilterBank::orthonormal(name, lo.clone())
    }

    /// Farras first stage with the 10-tap Q-shift pair for later levels.
    pub fn dual_tree(&self) -> Result<DualTreeFilterSet> {
        DualTreeFilterSet::new(
            self.bank("farras_h")?,
            self.bank("farras_g")?,
            self.bank("qshift_h")?,
            self.bank("qshift_g")?,
        )
    }
}
