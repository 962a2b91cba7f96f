mod overlay;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use ribtrace::evalbench::build_report;
use ribtrace::phantom::generate;
use ribtrace::probmap::combined_probability;
use ribtrace::tracer::extract_all;
use ribtrace::volgrid::{read_rvf, write_rvf};
use ribtrace::{CenterlineSet, PhantomSpec, ProbabilityMap, TraceParams};

use crate::overlay::{project, Axis};

const EXIT_INPUT: u8 = 2;
const EXIT_NOT_FOUND: u8 = 3;

#[derive(Parser)]
#[command(name = "ribtrace", version, about = "Rib centerline extraction from rib probability maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic probability map and its ground-truth centerlines.
    Phantom {
        /// Phantom spec JSON.
        #[arg(long)]
        spec: PathBuf,
        /// Isotropic voxel spacing in mm.
        #[arg(long, default_value_t = 1.5)]
        spacing: f64,
        /// Output prefix; writes <prefix>.rvf, <prefix>.raw and <prefix>.gt.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract and label rib centerlines from a 4-channel probability map.
    Trace {
        #[arg(long)]
        prob: PathBuf,
        /// Trace parameter overrides (JSON); defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare predicted centerlines against ground truth.
    Eval {
        /// Predicted centerline files, repeated or comma-separated.
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        pred: Vec<PathBuf>,
        /// Ground-truth centerline files, in the same order as --pred.
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        gt: Vec<PathBuf>,
        /// True-positive distance in mm.
        #[arg(long, default_value_t = 5.0)]
        delta: f64,
        /// Report JSON path; the text table goes next to it with a .txt extension.
        #[arg(long)]
        report: PathBuf,
    },
    /// Maximum-intensity projection with centerlines burned in, as a binary PGM.
    Overlay {
        #[arg(long)]
        prob: PathBuf,
        #[arg(long)]
        lines: Option<PathBuf>,
        /// Projection axis: x, y or z.
        #[arg(long)]
        axis: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let not_found = err.downcast_ref::<ribtrace::Error>().is_some_and(|e| e.is_not_found());
            ExitCode::from(if not_found { EXIT_NOT_FOUND } else { EXIT_INPUT })
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Phantom { spec, spacing, out } => cmd_phantom(&spec, spacing, &out),
        Command::Trace { prob, config, out } => cmd_trace(&prob, config.as_deref(), &out),
        Command::Eval { pred, gt, delta, report } => cmd_eval(&pred, &gt, delta, &report),
        Command::Overlay { prob, lines, axis, out } => cmd_overlay(&prob, lines.as_deref(), &axis, &out),
    }
}

/// `<prefix><suffix>`, keeping any dots already in the prefix.
fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn read_probability(path: &Path) -> anyhow::Result<ProbabilityMap> {
    let volume = read_rvf(path).with_context(|| format!("reading {}", path.display()))?;
    volume.into_probability().with_context(|| format!("reading {}", path.display()))
}

fn cmd_phantom(spec_path: &Path, spacing: f64, out: &Path) -> anyhow::Result<()> {
    let text = fs::read_to_string(spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let spec = PhantomSpec::from_json(&text)?;
    let (map, mut gt) = generate(&spec, spacing)?;
    let header = with_suffix(out, ".rvf");
    let channels: Vec<_> = map.channels().iter().collect();
    write_rvf(&header, &channels)?;
    if let Some(stem) = out.file_name() {
        gt.volume = stem.to_string_lossy().into_owned();
    }
    gt.write(&with_suffix(out, ".gt.json"))?;
    println!("wrote {} ({} ribs)", header.display(), gt.len());
    Ok(())
}

fn cmd_trace(prob: &Path, config: Option<&Path>, out: &Path) -> anyhow::Result<()> {
    let params = match config {
        Some(path) => TraceParams::read(path).with_context(|| format!("reading {}", path.display()))?,
        None => TraceParams::default(),
    };
    let map = read_probability(prob)?;
    let mut lines = extract_all(&map, &params)?;
    if let Some(stem) = prob.file_stem() {
        lines.volume = stem.to_string_lossy().into_owned();
    }
    lines.write(out)?;
    println!("{:<10}{:>8}{:>8}{:>8}{:>8}{:>8}", "rib", "side", "mm", "first", "12th", "inter.");
    for rib in &lines.ribs {
        let [first, twelfth, inter] = rib.class_scores.unwrap_or([f64::NAN; 3]);
        println!(
            "{:<10}{:>8}{:>8.1}{:>8.2}{:>8.2}{:>8.2}",
            rib.label.to_string(),
            format!("{:?}", rib.side).to_lowercase(),
            rib.length(),
            first,
            twelfth,
            inter
        );
    }
    Ok(())
}

fn cmd_eval(pred: &[PathBuf], gt: &[PathBuf], delta: f64, report: &Path) -> anyhow::Result<()> {
    if pred.len() != gt.len() {
        bail!("{} prediction files but {} ground-truth files", pred.len(), gt.len());
    }
    if !(delta > 0.0) {
        bail!("--delta must be positive, got {delta}");
    }
    let read = |p: &PathBuf| CenterlineSet::read(p).with_context(|| format!("reading {}", p.display()));
    let cases = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| Ok((read(p)?, read(g)?)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let result = build_report(&cases, delta)?;
    fs::write(report, result.to_json()?).with_context(|| format!("writing {}", report.display()))?;
    let text = result.to_text();
    let table = report.with_extension("txt");
    if table != report {
        fs::write(&table, &text).with_context(|| format!("writing {}", table.display()))?;
    }
    print!("{text}");
    Ok(())
}

fn cmd_overlay(prob: &Path, lines: Option<&Path>, axis: &str, out: &Path) -> anyhow::Result<()> {
    let axis: Axis = axis.parse()?;
    let map = read_probability(prob)?;
    let lines = match lines {
        Some(path) => CenterlineSet::read(path).with_context(|| format!("reading {}", path.display()))?,
        None => CenterlineSet::new("", Vec::new()),
    };
    let image = project(&combined_probability(&map), &lines, axis);
    fs::write(out, image.to_pgm()).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}
