//! Run manifests: `key=value` lines plus one `method=` line per method.
//!
//! ```text
//! # comment
//! root=/data/bruce            # base for the relative paths below; default: manifest directory
//! images=images/*.png         # wildcards (* and ?) in the file name only
//! fixations=fixations         # <stem>.csv per image
//! output=results
//! levels=4
//! sigma=auto                  # auto = image width / 32
//! bank=db4
//! clamp_negative_mi=true
//! method=dwt.wss
//! method=qwptbb.dis.searcher
//! method=pss
//! method=external itt maps/itt   # precomputed <stem>.pgm maps
//! ```

use std::path::{Path, PathBuf};

use regex::Regex;
use wavesal::saliency::{Mode, SaliencyConfig, ScaleRule};
use wavesal::wavelet::TransformKind;

use crate::{CliResult, Failure};

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Wavelet { kind: TransformKind, rule: ScaleRule, mode: Mode },
    Pss,
    External { name: String, dir: PathBuf },
}

impl Method {
    /// `(method, mode, scale_rule)` columns of the results table.
    pub fn columns(&self) -> (String, String, String) {
        match self {
            Method::Wavelet { kind, rule, mode } => (kind.to_string(), mode.to_string(), rule.to_string()),
            Method::Pss => ("pss".into(), "-".into(), "-".into()),
            Method::External { name, .. } => (name.clone(), "-".into(), "-".into()),
        }
    }

    /// File-name tag, e.g. `qwt.dis.searcher`.
    pub fn tag(&self) -> String {
        match self {
            Method::Wavelet { kind, rule, mode } => {
                let cfg = SaliencyConfig { transform_kind: *kind, scale_rule: *rule, mode: *mode, ..Default::default() };
                cfg.method_tag()
            }
            Method::Pss => "pss".into(),
            Method::External { name, .. } => name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub root: PathBuf,
    pub images: String,
    pub fixations: PathBuf,
    pub output: PathBuf,
    pub levels: usize,
    /// `None` means image width / 32.
    pub sigma: Option<f64>,
    pub bank: String,
    pub clamp_negative_mi: bool,
    pub methods: Vec<Method>,
}

fn usage(line: usize, msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("manifest line {line}: {msg}"))
}

fn parse_method(value: &str, line: usize) -> CliResult<Method> {
    let words: Vec<&str> = value.split_whitespace().collect();
    match words.as_slice() {
        ["pss"] => Ok(Method::Pss),
        ["external", name, dir] => {
            if name.contains(['.', '/', ',']) {
                return Err(usage(line, format!("external method name `{name}` may not contain `.`, `/` or `,`")));
            }
            Ok(Method::External { name: name.to_string(), dir: PathBuf::from(dir) })
        }
        [tag] => {
            let parts: Vec<&str> = tag.split('.').collect();
            let (kind, rule, mode) = match parts.as_slice() {
                [k, r] => (k, r, "observer"),
                [k, r, m] => (k, r, *m),
                _ => return Err(usage(line, format!("expected <transform>.<rule>[.<mode>], found `{tag}`"))),
            };
            Ok(Method::Wavelet {
                kind: kind.parse().map_err(|e| usage(line, e))?,
                rule: rule.parse().map_err(|e| usage(line, e))?,
                mode: mode.parse().map_err(|e| usage(line, e))?,
            })
        }
        _ => Err(usage(line, format!("cannot read method `{value}`"))),
    }
}

impl Manifest {
    /// Parses `text`; relative paths resolve against `root`, which itself
    /// resolves against `base`.
    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let mut root = base.to_path_buf();
        let mut images = None;
        let mut fixations = None;
        let mut output = None;
        let mut m = Manifest {
            root: PathBuf::new(),
            images: String::new(),
            fixations: PathBuf::new(),
            output: PathBuf::new(),
            levels: SaliencyConfig::default().levels,
            sigma: None,
            bank: SaliencyConfig::default().bank,
            clamp_negative_mi: true,
            methods: Vec::new(),
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(usage(line, format!("expected key=value, found `{content}`")));
            };
            let value = value.trim();
            match key.trim() {
                "root" => root = base.join(value),
                "images" => images = Some(value.to_string()),
                "fixations" => fixations = Some(PathBuf::from(value)),
                "output" => output = Some(PathBuf::from(value)),
                "levels" => {
                    m.levels = value
                        .parse()
                        .ok()
                        .filter(|&l| l >= 2)
                        .ok_or_else(|| usage(line, format!("levels must be an integer >= 2, found `{value}`")))?
                }
                "sigma" => {
                    m.sigma = match value {
                        "auto" => None,
                        v => Some(
                            v.parse::<f64>()
                                .ok()
                                .filter(|s| s.is_finite() && *s >= 0.0)
                                .ok_or_else(|| usage(line, format!("sigma must be `auto` or a number >= 0, found `{v}`")))?,
                        ),
                    }
                }
                "bank" => m.bank = value.to_string(),
                "clamp_negative_mi" => {
                    m.clamp_negative_mi = value
                        .parse()
                        .map_err(|_| usage(line, format!("expected true or false, found `{value}`")))?
                }
                "method" => m.methods.push(parse_method(value, line)?),
                other => return Err(usage(line, format!("unknown key `{other}`"))),
            }
        }
        let missing = |k: &str| Failure::Usage(format!("manifest has no `{k}=` line"));
        m.images = images.ok_or_else(|| missing("images"))?;
        m.fixations = root.join(fixations.ok_or_else(|| missing("fixations"))?);
        m.output = root.join(output.ok_or_else(|| missing("output"))?);
        for method in &mut m.methods {
            if let Method::External { dir, .. } = method {
                *dir = root.join(&*dir);
            }
        }
        m.root = root;
        if m.methods.is_empty() {
            return Err(missing("method"));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base)
    }

    /// Every input directory must exist before the run starts.
    pub fn check_paths(&self) -> CliResult<()> {
        let (dir, _) = self.image_pattern();
        let mut dirs = vec![dir, self.fixations.clone()];
        for m in &self.methods {
            if let Method::External { dir, .. } = m {
                dirs.push(dir.clone());
            }
        }
        match dirs.iter().find(|d| !d.is_dir()) {
            Some(d) => Err(Failure::Usage(format!("directory {} does not exist", d.display()))),
            None => Ok(()),
        }
    }

    fn image_pattern(&self) -> (PathBuf, String) {
        let full = self.root.join(&self.images);
        let dir = full.parent().map(Path::to_path_buf).unwrap_or_default();
        let name = full.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        (dir, name)
    }

    /// Images matching the `images` pattern, sorted by path.
    pub fn image_paths(&self) -> CliResult<Vec<PathBuf>> {
        let (dir, pattern) = self.image_pattern();
        let re = Regex::new(&format!("^{}$", regex::escape(&pattern).replace(r"\*", ".*").replace(r"\?", ".")))
            .map_err(|e| Failure::Usage(format!("bad image pattern `{pattern}`: {e}")))?;
        let entries =
            std::fs::read_dir(&dir).map_err(|e| Failure::Runtime(format!("cannot list {}: {e}", dir.display())))?;
        let mut paths: Vec<PathBuf> = entries
            .flatten()
            .map(|e| e.path())
            .filter(|p| p.is_file() && p.file_name().is_some_and(|n| re.is_match(&n.to_string_lossy())))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Failure::Usage(format!("no images match {}", dir.join(&pattern).display())));
        }
        Ok(paths)
    }
}
