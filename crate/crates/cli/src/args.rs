use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dcsynth_core::generators::GeneratorKind;
use dcsynth_core::learners::ClassifierKind;
use dcsynth_core::pipeline::Preprocessing;
use dcsynth_core::profiling::{ProfileMethod, ThresholdMode};
use dcsynth_core::report::{ExportFormat, GroupKey};

#[derive(Debug, Parser)]
#[command(
    name = "dcsynth",
    version,
    about = "Data-centric profiling and segmented synthetic data experiments"
)]
pub struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Log progress at info level.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment grid from a config file.
    Run(RunArgs),
    /// Profile a CSV and write per-row tags.
    Profile(ProfileArgs),
    /// Fit a (segmented) generator and write synthetic rows.
    Generate(GenerateArgs),
    /// Score synthetic data against real data.
    Evaluate(EvaluateArgs),
    /// Write a simulated dataset.
    Simulate(SimulateArgs),
    /// Flipped-label detection benchmark over threshold grids.
    ThresholdBench(ThresholdBenchArgs),
    /// Label-noise sweep over generators and strategies.
    NoiseSweep(NoiseSweepArgs),
    /// Aggregate run results into tables.
    Report(ReportArgs),
}

fn parse_enum<T: std::str::FromStr<Err = dcsynth_core::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: dcsynth_core::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<ProfileMethod, String> {
    parse_enum(s)
}
fn parse_mode(s: &str) -> Result<ThresholdMode, String> {
    parse_enum(s)
}
fn parse_generator(s: &str) -> Result<GeneratorKind, String> {
    parse_enum(s)
}
fn parse_learner(s: &str) -> Result<ClassifierKind, String> {
    parse_enum(s)
}
fn parse_pre(s: &str) -> Result<Preprocessing, String> {
    parse_enum(s)
}
fn parse_group(s: &str) -> Result<GroupKey, String> {
    parse_enum(s)
}
fn parse_format(s: &str) -> Result<ExportFormat, String> {
    match s {
        "csv" => Ok(ExportFormat::Csv),
        "json" => Ok(ExportFormat::Json),
        _ => Err(format!("unknown format {s:?} (expected csv or json)")),
    }
}

/// Replicate seeds from `--seeds`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

fn parse_seed_list(s: &str) -> Result<SeedList, String> {
    parse_seeds(s).map(SeedList)
}

/// Seed list: `a..b` (inclusive) or comma-separated values.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let a: u64 = a
            .trim()
            .parse()
            .map_err(|_| format!("bad seed range {s:?}"))?;
        let b: u64 = b
            .trim()
            .parse()
            .map_err(|_| format!("bad seed range {s:?}"))?;
        if b < a {
            return Err(format!("empty seed range {s:?}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| format!("bad seed {p:?}")))
        .collect()
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output directory (overrides the config file).
    #[arg(long, env = "DCSYNTH_OUT")]
    pub out: Option<PathBuf>,
    /// Recompute results whose files already exist.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Replace the config's seeds, e.g. `1..8` or `1,2,5`.
    #[arg(long, value_parser = parse_seed_list)]
    pub seeds: Option<SeedList>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ProfilerArgs {
    #[arg(long, value_parser = parse_method, default_value = "cleanlab")]
    pub method: ProfileMethod,
    #[arg(long, value_parser = parse_mode, default_value = "value")]
    pub mode: ThresholdMode,
    #[arg(long, default_value_t = 0.2)]
    pub tau: f64,
    #[arg(long, value_parser = parse_learner, default_value = "gradient_boosting")]
    pub learner: ClassifierKind,
}

#[derive(Debug, Args)]
pub struct CsvInput {
    /// Name of the label column.
    #[arg(long, default_value = "y")]
    pub label: String,
    /// Treat these columns as categorical.
    #[arg(long, value_delimiter = ',')]
    pub categorical: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    pub data: PathBuf,
    #[command(flatten)]
    pub csv: CsvInput,
    #[command(flatten)]
    pub profiler: ProfilerArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV (defaults to `<out dir>/profile.csv`).
    #[arg(long, env = "DCSYNTH_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Training CSV; not needed with --model.
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvInput,
    #[arg(long, value_parser = parse_generator, default_value = "chow_liu_bn")]
    pub generator: GeneratorKind,
    #[arg(long, value_parser = parse_pre, default_value = "baseline")]
    pub preprocessing: Preprocessing,
    #[command(flatten)]
    pub profiler: ProfilerArgs,
    /// Rows to sample (defaults to the training size).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Load a saved generator instead of fitting one.
    #[arg(long, conflicts_with = "data")]
    pub model: Option<PathBuf>,
    /// Save the fitted generator as JSON.
    #[arg(long)]
    pub save_model: Option<PathBuf>,
    /// Output directory for `synthetic.csv`.
    #[arg(long, env = "DCSYNTH_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub real: PathBuf,
    #[arg(long)]
    pub synth: PathBuf,
    /// Held-out real rows; enables utility evaluation.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvInput,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report JSON into this directory instead of stdout.
    #[arg(long, env = "DCSYNTH_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 10)]
    pub features: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of labels to flip.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Output directory for `simulated.csv`.
    #[arg(long, env = "DCSYNTH_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdBenchArgs {
    /// Benchmark config; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_seed_list)]
    pub seeds: Option<SeedList>,
    /// Use the literal tiny dataset shapes instead of the scaled ones.
    #[arg(long)]
    pub small_shapes: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct NoiseSweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_parser = parse_seed_list)]
    pub seeds: Option<SeedList>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding run result JSON files (searched recursively).
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long, value_delimiter = ',', value_parser = parse_group,
          default_value = "generator,preprocessing,postprocessing")]
    pub group_by: Vec<GroupKey>,
    #[arg(long, value_parser = parse_format, default_value = "csv")]
    pub format: ExportFormat,
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "DCSYNTH_OUT")]
    pub out: Option<PathBuf>,
}
