use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hedge_core::evaluation::{DEFAULT_SWEEP_AXIS, TAU_BOUNDS, TAU_TRIALS};
use hedge_core::{Eq1Mode, InputMode, Metric};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "hedge",
    version,
    about = "Hallucination detection by semantic dispersion under visual distortion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every case of a JSONL dataset.
    Validate(ValidateArgs),
    /// Write distorted variants of every image in a directory.
    Distort(DistortArgs),
    /// Cluster and score each case; write per-case scores and an AUC report.
    Score(ScoreArgs),
    /// Grid-search the embedding threshold on a tuning split.
    Tune(TuneArgs),
    /// AUC as a function of the number of sampled answers.
    Sweep(SweepArgs),
    /// Merge score files from earlier runs into one report.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgeKind {
    Mock,
    Live,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clustering {
    Nli,
    Embedding,
    Both,
}

impl Clustering {
    pub fn as_str(self) -> &'static str {
        match self {
            Clustering::Nli => "nli",
            Clustering::Embedding => "embedding",
            Clustering::Both => "both",
        }
    }
}

/// `--tau`: a fixed threshold or `tune`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauArg {
    Fixed(f64),
    Tune(TuneTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TuneTag {
    Tune,
}

impl FromStr for TauArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("tune") {
            return Ok(TauArg::Tune(TuneTag::Tune));
        }
        s.parse()
            .map(TauArg::Fixed)
            .map_err(|_| format!("expected a number or `tune`, got `{s}`"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct JudgeArgs {
    /// `mock` needs no network; `live` talks to the model bridge.
    #[arg(long, value_enum, default_value_t = JudgeKind::Mock)]
    pub judges: JudgeKind,
    #[arg(long, env = "HEDGE_BRIDGE_URL")]
    pub bridge_url: Option<String>,
    /// Seed of the mock embedder.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ScoringArgs {
    #[arg(long, default_value = "answer_only")]
    pub mode: InputMode,
    /// Extra nearest-neighbor edges per answer (embedding clustering only).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value = "verbatim")]
    pub eq1_mode: Eq1Mode,
    /// Model name recorded in reports.
    #[arg(long, default_value = "unknown")]
    pub model: String,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    /// Embedding threshold, or `tune` to search it on `--tune-split`.
    #[arg(long)]
    pub tau: Option<TauArg>,
    /// Dataset used to tune `tau`; must be given with `--tau tune`.
    #[arg(long)]
    pub tune_split: Option<PathBuf>,
    /// Metric maximized while tuning.
    #[arg(long, default_value = "vase")]
    pub tune_metric: Metric,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    pub dataset: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DistortArgs {
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Variants per image.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = Clustering::Nli)]
    pub clustering: Clustering,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    /// Truncate both pools to their first `n` answers.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[command(flatten)]
    pub judges: JudgeArgs,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    /// The tuning split.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "vase")]
    pub metric: Metric,
    #[arg(long, default_value_t = TAU_BOUNDS.0)]
    pub tau_min: f64,
    #[arg(long, default_value_t = TAU_BOUNDS.1)]
    pub tau_max: f64,
    #[arg(long, default_value_t = TAU_TRIALS)]
    pub trials: usize,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[command(flatten)]
    pub judges: JudgeArgs,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = Clustering::Both)]
    pub clustering: Clustering,
    #[command(flatten)]
    pub threshold: ThresholdArgs,
    /// Comma-separated pool sizes.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SWEEP_AXIS.to_vec())]
    pub n_values: Vec<usize>,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[command(flatten)]
    pub judges: JudgeArgs,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Run directories or their `scores.jsonl` files.
    pub runs: Vec<PathBuf>,
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}
