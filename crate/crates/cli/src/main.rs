//! `wavesal`: saliency maps, dataset evaluation and coefficient dumps.
//!
//! Exit status is 0 on success, 1 when processing fails and 2 for usage
//! errors (bad flags, invalid manifests, depths the image cannot support).

mod dump;
mod evaluate;
mod manifest;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wavesal::imagedata::{load_image, write_map};
use wavesal::saliency::{compute_map_with, Mode, SaliencyConfig, ScaleRule};
use wavesal::wavelet::{max_levels, FilterLibrary, TransformKind};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<wavesal::Error> for Failure {
    fn from(e: wavesal::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;

#[derive(Parser)]
#[command(name = "wavesal", version, about = "Wavelet-domain scale saliency")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a saliency map and write `<stem>.<method tag>.pgm` plus a sidecar.
    Saliency(SaliencyArgs),
    /// Score every method of a manifest against eye fixations.
    Eval(EvalArgs),
    /// Dump the coefficients of one decomposition as CSV.
    Transform(TransformArgs),
}

#[derive(clap::Args)]
struct SaliencyArgs {
    image: PathBuf,
    /// dwt, dwptbb, qwt or qwptbb
    #[arg(long, default_value = "dwt", value_parser = parse_kind)]
    transform: TransformKind,
    /// observer or searcher
    #[arg(long, default_value = "observer", value_parser = parse_mode)]
    mode: Mode,
    /// wss or dis
    #[arg(long, default_value = "wss", value_parser = parse_rule)]
    scale_rule: ScaleRule,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(2..))]
    levels: u32,
    /// Gaussian smoothing of the map in pixels [default: image width / 32]
    #[arg(long)]
    sigma: Option<f64>,
    /// Single-tree filter bank (dwt and dwptbb only) [default: db4]
    #[arg(long)]
    bank: Option<String>,
    /// Keep negative mutual information instead of clamping it to 0.
    #[arg(long)]
    no_clamp: bool,
    /// Also write the per-pixel scale field to `<stem>.<method tag>.scales.csv`.
    #[arg(long)]
    dump_scales: bool,
    /// Output directory [default: next to the image]
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(clap::Args)]
struct EvalArgs {
    manifest: PathBuf,
    /// Images evaluated concurrently.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
}

#[derive(clap::Args)]
struct TransformArgs {
    image: PathBuf,
    #[arg(long, default_value = "dwt", value_parser = parse_kind)]
    transform: TransformKind,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    levels: u32,
    #[arg(long)]
    bank: Option<String>,
    /// Coefficient CSV [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write fitted GGD parameters per detail band.
    #[arg(long)]
    ggd: Option<PathBuf>,
    /// Keep rounding residue instead of flushing it to zero.
    #[arg(long)]
    raw: bool,
}

fn parse_kind(s: &str) -> wavesal::Result<TransformKind> {
    s.parse()
}

fn parse_mode(s: &str) -> wavesal::Result<Mode> {
    s.parse()
}

fn parse_rule(s: &str) -> wavesal::Result<ScaleRule> {
    s.parse()
}

pub fn filters() -> CliResult<FilterLibrary> {
    Ok(FilterLibrary::from_env()?)
}

/// `--bank` is meaningless for the dual-tree transforms.
fn resolve_bank(kind: TransformKind, bank: Option<String>) -> CliResult<String> {
    match bank {
        Some(b) if kind.is_dual_tree() => Err(Failure::Usage(format!(
            "--bank {b} does not apply to {kind}, which uses the dual-tree filters"
        ))),
        Some(b) => Ok(b),
        None => Ok(SaliencyConfig::default().bank),
    }
}

pub fn check_depth(levels: usize, width: usize, height: usize) -> CliResult<()> {
    let limit = max_levels(width, height);
    if levels > limit {
        return Err(Failure::Usage(format!(
            "--levels {levels} exceeds the limit of {limit} for a {width}x{height} image"
        )));
    }
    Ok(())
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cmd_saliency(args: SaliencyArgs) -> CliResult<()> {
    let bank = resolve_bank(args.transform, args.bank)?;
    if let Some(s) = args.sigma {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Failure::Usage(format!("--sigma must be a finite value >= 0, got {s}")));
        }
    }
    let filters = filters()?;
    let image = load_image(&args.image)?;
    let levels = args.levels as usize;
    check_depth(levels, image.width(), image.height())?;
    let config = SaliencyConfig {
        mode: args.mode,
        scale_rule: args.scale_rule,
        levels,
        transform_kind: args.transform,
        smoothing_sigma: args.sigma.unwrap_or(image.width() as f64 / 32.0),
        clamp_negative_mi: !args.no_clamp,
        bank,
    };
    let (map, field) = compute_map_with(&image, &config, &filters)?;

    let dir = match args.out_dir {
        Some(d) => d,
        None => args.image.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let base = format!("{}.{}", file_stem(&args.image), config.method_tag());
    let out = dir.join(format!("{base}.pgm"));
    write_map(&map, &out)?;
    if args.dump_scales {
        write_file(&dir.join(format!("{base}.scales.csv")), &field.to_csv())?;
    }
    println!("{}", out.display());
    Ok(())
}

fn cmd_transform(args: TransformArgs) -> CliResult<()> {
    let bank = resolve_bank(args.transform, args.bank)?;
    let filters = filters()?;
    let image = load_image(&args.image)?;
    let levels = args.levels as usize;
    check_depth(levels, image.width(), image.height())?;
    let config = SaliencyConfig { transform_kind: args.transform, levels, bank, ..Default::default() };
    let tree = wavesal::saliency::decompose(&image, &config, &filters)?;
    let csv = dump::coefficients_csv(&tree, !args.raw);
    match &args.out {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.ggd {
        write_file(path, &dump::ggd_csv(&tree))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Saliency(a) => cmd_saliency(a),
        Command::Eval(a) => evaluate::cmd_eval(&a.manifest, a.jobs as usize),
        Command::Transform(a) => cmd_transform(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
