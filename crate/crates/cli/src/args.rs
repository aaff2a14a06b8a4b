use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lvq_core::frameio::ClipFormat;
use lvq_core::metrics::MetricKind;
use lvq_core::subjective::Cohort;
use lvq_core::synth::ContentCategory;

#[derive(Debug, Parser)]
#[command(name = "lvq", version, about = "Laparoscopic video quality pipeline")]
pub struct Cli {
    /// JSON pipeline configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render procedural reference clips, one per content category.
    Refs(RefsArgs),
    /// Write 20 distorted variants of every reference plus the manifest.
    Synth(SynthArgs),
    /// Identify the distortion of every corpus video and score accuracy.
    Classify(ClassifyArgs),
    /// Fit classifier thresholds to a corpus and its references.
    Calibrate(CalibrateArgs),
    /// Full-reference metric scores for every corpus video.
    Score(ScoreArgs),
    /// Pairwise-comparison session plans, one file per observer.
    Plan(PlanArgs),
    /// Answer session plans with synthetic observers.
    Simulate(SimulateArgs),
    /// Screen observers and compute MOS for one cohort.
    Aggregate(AggregateArgs),
    /// Correlate metric scores with MOS.
    Report(ReportArgs),
    /// Serve plans and accept records over HTTP for the study UI.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct RefsArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Comma-separated category codes; all ten by default.
    #[arg(long, value_delimiter = ',')]
    pub categories: Vec<ContentCategory>,
    #[arg(long, default_value = "y4m")]
    pub format: ClipFormat,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory of reference clips (with `refs.json`, or files named by
    /// category code).
    #[arg(long)]
    pub refs: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "y4m")]
    pub format: ClipFormat,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Report JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Thresholds JSON, e.g. the output of `calibrate`.
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
    /// Also classify the pristine references (expected: None).
    #[arg(long)]
    pub include_refs: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Thresholds JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of psnr, ssim, vif.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<MetricKind>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Observer ids; repeat or comma-separate.
    #[arg(long = "observer", required = true, value_delimiter = ',')]
    pub observers: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory receiving `<observer>.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory of plans to answer.
    #[arg(long)]
    pub plans: Option<PathBuf>,
    /// Directory receiving `<observer>.json` records.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Observers that answer at random instead of following the model.
    #[arg(long, value_delimiter = ',')]
    pub random: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[arg(long)]
    pub plans: Option<PathBuf>,
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub cohort: Option<Cohort>,
    /// MOS CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Outlier screening report JSON.
    #[arg(long)]
    pub outliers: Option<PathBuf>,
    /// Keep every observer, flagged or not.
    #[arg(long)]
    pub no_screen: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// MOS CSV files, one per cohort.
    #[arg(long)]
    pub mos: Vec<PathBuf>,
    /// Only report this cohort.
    #[arg(long)]
    pub cohort: Option<Cohort>,
    /// Markdown tables.
    #[arg(long)]
    pub out: PathBuf,
    /// Long-format CSV of every row.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub plans: Option<PathBuf>,
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Static files (the study UI build), served for any other GET.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
}
