//! Scoring saliency maps against fixations: ROC/AUC, median-standardized
//! NSS, and per-method aggregation.
//!
//! Positives are the distinct fixated pixels and negatives every other
//! pixel. AUC is accumulated from integer counts, so it equals the
//! Mann–Whitney statistic (ties counted as one half) exactly.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::imagedata::{FixationSet, SaliencyMap};

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl RocCurve {
    /// CSV `fpr,tpr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for (f, t) in &self.points {
            out.push_str(&format!("{f},{t}\n"));
        }
        out
    }
}

fn check_fixations(map: &SaliencyMap, fixations: &FixationSet) -> Result<()> {
    if fixations.is_empty() {
        return Err(Error::param(format!("no fixations for `{}`", fixations.image_id)));
    }
    if let Some(&(x, y)) = fixations.points.iter().find(|&&(x, y)| x >= map.width() || y >= map.height()) {
        return Err(Error::param(format!(
            "fixation ({x}, {y}) outside the {}x{} map",
            map.width(),
            map.height()
        )));
    }
    Ok(())
}

/// ROC over thresholds at every distinct map value, a pixel counting as
/// detected when its value is ≥ the threshold.
pub fn roc_auc(map: &SaliencyMap, fixations: &FixationSet) -> Result<RocCurve> {
    check_fixations(map, fixations)?;
    let fixated: BTreeSet<(usize, usize)> = fixations.points.iter().copied().collect();
    let total = map.width() * map.height();
    let (pos, neg) = (fixated.len() as u64, (total - fixated.len()) as u64);
    if neg == 0 {
        return Err(Error::Degenerate("every pixel is fixated; no negatives".into()));
    }

    let mut samples: Vec<(f64, bool)> = map
        .values()
        .indexed_iter()
        .map(|((y, x), &v)| (v, fixated.contains(&(x, y))))
        .collect();
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    // twice the trapezoid area in units of one (positive, negative) pair
    let mut area2: u128 = 0;
    let mut i = 0;
    while i < samples.len() {
        let v = samples[i].0;
        let (prev_tp, prev_fp) = (tp, fp);
        while i < samples.len() && samples[i].0 == v {
            if samples[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += (fp - prev_fp) as u128 * (tp + prev_tp) as u128;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(RocCurve {
        points,
        auc: area2 as f64 / (2 * pos as u128 * neg as u128) as f64,
    })
}

/// NSS outcome. A constant map scores 0 with `degenerate` set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NssScore {
    pub value: f64,
    pub degenerate: bool,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Mean over fixations of `(S − median(S)) / std(S)`, with the population
/// standard deviation of all map values.
pub fn nss(map: &SaliencyMap, fixations: &FixationSet) -> Result<NssScore> {
    check_fixations(map, fixations)?;
    let (lo, hi) = map.min_max();
    if lo == hi {
        return Ok(NssScore { value: 0.0, degenerate: true });
    }
    let mut values: Vec<f64> = map.values().iter().copied().collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let med = median(&mut values);
    let total: f64 = fixations.points.iter().map(|&(x, y)| (map.get(x, y) - med) / std).sum();
    Ok(NssScore {
        value: total / fixations.len() as f64,
        degenerate: false,
    })
}

/// Scores for one image under one method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub auc: f64,
    pub nss: f64,
    pub time_ms: f64,
}

/// Unweighted means over scored images.
pub fn aggregate(scores: &[Scores]) -> Result<Scores> {
    if scores.is_empty() {
        return Err(Error::param("nothing to aggregate"));
    }
    let n = scores.len() as f64;
    let mean = |f: fn(&Scores) -> f64| scores.iter().map(f).sum::<f64>() / n;
    Ok(Scores {
        auc: mean(|s| s.auc),
        nss: mean(|s| s.nss),
        time_ms: mean(|s| s.time_ms),
    })
}

/// One line of the results table. `scores` is `None` for a skipped image.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub image_id: String,
    pub method: String,
    pub mode: String,
    pub scale_rule: String,
    pub scores: Option<Scores>,
}

pub const RESULTS_HEADER: &str = "image_id,method,mode,scale_rule,auc,nss,time_ms";

/// Results CSV: the given rows in order, then one `MEAN` row per
/// `(method, mode, scale_rule)` that scored at least one image. Skipped
/// images appear with `NA` scores.
pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    let mut groups: BTreeMap<(&str, &str, &str), Vec<Scores>> = BTreeMap::new();
    for r in rows {
        let key = (r.method.as_str(), r.mode.as_str(), r.scale_rule.as_str());
        match r.scores {
            Some(s) => {
                out.push_str(&format_row(&r.image_id, key, &s));
                groups.entry(key).or_default().push(s);
            }
            None => out.push_str(&format!("{},{},{},{},NA,NA,NA\n", r.image_id, key.0, key.1, key.2)),
        }
    }
    for (key, scores) in groups {
        let mean = aggregate(&scores).expect("groups are nonempty");
        out.push_str(&format_row("MEAN", key, &mean));
    }
    out
}

fn format_row(id: &str, (method, mode, rule): (&str, &str, &str), s: &Scores) -> String {
    format!("{id},{method},{mode},{rule},{},{},{:.3}\n", s.auc, s.nss, s.time_ms)
}
