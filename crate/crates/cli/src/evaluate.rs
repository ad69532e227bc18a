//! `wavesal eval`: score each manifest method on each image.
//!
//! Writes `<output>/results.csv` and `<output>/roc/<stem>.<tag>.csv`. An
//! image without a fixation file, or an external method without a map for
//! it, is reported on stderr and recorded as an `NA` row.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use wavesal::eval::{nss, results_csv, roc_auc, ResultRow, Scores};
use wavesal::imagedata::{load_fixations, load_image};
use wavesal::pss::{pss_map, PssConfig};
use wavesal::saliency::{compute_map_with, SaliencyConfig};
use wavesal::wavelet::FilterLibrary;
use wavesal::{FixationSet, Image, SaliencyMap};

use crate::manifest::{Manifest, Method};
use crate::{check_depth, filters, write_file, CliResult, Failure};

struct Outcome {
    row: ResultRow,
    roc: Option<(String, String)>,
}

#[derive(Default)]
struct ImageReport {
    outcomes: Vec<Outcome>,
    warnings: Vec<String>,
}

fn row(id: &str, method: &Method, scores: Option<Scores>) -> ResultRow {
    let (method, mode, scale_rule) = method.columns();
    ResultRow { image_id: id.to_string(), method, mode, scale_rule, scores }
}

/// The map for `method` and the wall time of computing it, or `None` when an
/// external map is missing.
fn produce(
    manifest: &Manifest,
    filters: &FilterLibrary,
    image: &Image,
    id: &str,
    method: &Method,
) -> CliResult<Option<(SaliencyMap, f64)>> {
    match method {
        Method::Wavelet { kind, rule, mode } => {
            let config = SaliencyConfig {
                mode: *mode,
                scale_rule: *rule,
                levels: manifest.levels,
                transform_kind: *kind,
                smoothing_sigma: manifest.sigma.unwrap_or(image.width() as f64 / 32.0),
                clamp_negative_mi: manifest.clamp_negative_mi,
                bank: manifest.bank.clone(),
            };
            let start = Instant::now();
            let (map, _) = compute_map_with(image, &config, filters)?;
            Ok(Some((map, start.elapsed().as_secs_f64() * 1e3)))
        }
        Method::Pss => {
            let start = Instant::now();
            let map = pss_map(image, &PssConfig::default())?;
            Ok(Some((map, start.elapsed().as_secs_f64() * 1e3)))
        }
        Method::External { name, dir } => {
            let path = dir.join(format!("{id}.pgm"));
            if !path.is_file() {
                return Ok(None);
            }
            let ext = load_image(&path)?;
            if (ext.width(), ext.height()) != (image.width(), image.height()) {
                return Err(Failure::Runtime(format!(
                    "{}: {}x{} map for a {}x{} image",
                    path.display(),
                    ext.width(),
                    ext.height(),
                    image.width(),
                    image.height()
                )));
            }
            Ok(Some((SaliencyMap::new(ext.pixels().clone(), name.as_str(), "")?, 0.0)))
        }
    }
}

fn score(map: &SaliencyMap, fixations: &FixationSet, time_ms: f64, warnings: &mut Vec<String>, label: &str) -> CliResult<(Scores, String)> {
    let roc = roc_auc(map, fixations)?;
    let n = nss(map, fixations)?;
    if n.degenerate {
        warnings.push(format!("{label}: constant map, NSS set to 0"));
    }
    Ok((Scores { auc: roc.auc, nss: n.value, time_ms }, roc.to_csv()))
}

fn evaluate_image(manifest: &Manifest, filters: &FilterLibrary, path: &Path) -> CliResult<ImageReport> {
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut report = ImageReport::default();
    let fix_path = manifest.fixations.join(format!("{id}.csv"));
    if !fix_path.is_file() {
        report.warnings.push(format!("{id}: no fixation file {}, image skipped", fix_path.display()));
        report.outcomes = manifest.methods.iter().map(|m| Outcome { row: row(&id, m, None), roc: None }).collect();
        return Ok(report);
    }
    let image = load_image(path)?;
    if manifest.methods.iter().any(|m| matches!(m, Method::Wavelet { .. })) {
        check_depth(manifest.levels, image.width(), image.height())?;
    }
    let fixations = load_fixations(&fix_path, &image)?;
    for method in &manifest.methods {
        let label = format!("{id} {}", method.tag());
        let outcome = match produce(manifest, filters, &image, &id, method)? {
            Some((map, time_ms)) => {
                let (scores, roc) = score(&map, &fixations, time_ms, &mut report.warnings, &label)?;
                Outcome { row: row(&id, method, Some(scores)), roc: Some((format!("{id}.{}.csv", method.tag()), roc)) }
            }
            None => {
                report.warnings.push(format!("{label}: no precomputed map, skipped"));
                Outcome { row: row(&id, method, None), roc: None }
            }
        };
        report.outcomes.push(outcome);
    }
    Ok(report)
}

fn create_dir(dir: &PathBuf) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

pub fn cmd_eval(manifest_path: &Path, jobs: usize) -> CliResult<()> {
    let manifest = Manifest::load(manifest_path)?;
    manifest.check_paths()?;
    let images = manifest.image_paths()?;
    let filters = filters()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Runtime(format!("cannot start worker pool: {e}")))?;
    let reports: Vec<ImageReport> = pool.install(|| {
        images
            .par_iter()
            .map(|p| evaluate_image(&manifest, &filters, p))
            .collect::<CliResult<_>>()
    })?;

    let roc_dir = manifest.output.join("roc");
    create_dir(&roc_dir)?;
    let mut rows = Vec::new();
    for report in reports {
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        for o in report.outcomes {
            if let Some((name, csv)) = &o.roc {
                write_file(&roc_dir.join(name), csv)?;
            }
            rows.push(o.row);
        }
    }
    let results = manifest.output.join("results.csv");
    write_file(&results, &results_csv(&rows))?;
    println!("{}", results.display());
    Ok(())
}
