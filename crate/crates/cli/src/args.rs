use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use apt_align_core::tinylm::Scheduler;

#[derive(Debug, Parser)]
#[command(name = "apt-align", version, about = "Paraphrase-type generation and detection pipeline")]
pub struct Cli {
    /// Seed for every random choice the command makes (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; created if missing. Defaults to `run`, or
    /// `<run>/report` for the report command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize a corpus file and count paraphrase types.
    Ingest(IngestArgs),
    /// Seeded train/test split with a manifest.
    Split(SplitArgs),
    /// Build chosen/rejected pairs from human rankings.
    Pairs(PairsArgs),
    /// Train the tiny model (sft, dpo or ipo).
    Train(TrainArgs),
    /// Generate paraphrases with a trained checkpoint.
    Gen(GenArgs),
    /// Accuracy, rankings, significance, agreement and metric correlations.
    Eval(EvalArgs),
    /// Per-class F1 with bootstrap intervals for type detection.
    PtdEval(PtdEvalArgs),
    /// Bundle a run directory's tables into one markdown report.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IngestFormat {
    /// Typed sentence pairs; every paraphrase needs a type.
    Etpc,
    /// Binary paraphrase pairs; types may be empty.
    Qqp,
    /// Preference records.
    Prefs,
    /// Human ranking annotations.
    Annotations,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, value_enum)]
    pub format: IngestFormat,
    pub input: PathBuf,
    /// Exit with a schema error if any line is rejected.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitKind {
    Pairs,
    Prefs,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "pairs")]
    pub kind: SplitKind,
    /// Train fraction (default 0.7 for pairs, 0.8 for prefs).
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Keep only the ten detection types; drop pairs left without a type.
    #[arg(long)]
    pub top10: bool,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    #[arg(long, requires = "generations")]
    pub annotations: Option<PathBuf>,
    #[arg(long, requires = "annotations")]
    pub generations: Option<PathBuf>,
    /// Emit this many synthetic reversal pairs instead.
    #[arg(long, conflicts_with_all = ["annotations", "generations"])]
    pub synthetic_reversal: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrainMethod {
    Sft,
    Dpo,
    Ipo,
}

fn parse_scheduler(s: &str) -> Result<Scheduler, String> {
    match s {
        "cosine" => Ok(Scheduler::Cosine),
        "plateau" => Ok(Scheduler::Plateau),
        _ => Err(format!("unknown scheduler {s:?} (cosine or plateau)")),
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(value_enum)]
    pub method: TrainMethod,
    /// pairs.jsonl for sft, prefs.jsonl for dpo/ipo.
    #[arg(long, required_unless_present = "synthetic")]
    pub data: Option<PathBuf>,
    /// Train on this many synthetic reversal pairs instead of a data file.
    #[arg(long, conflicts_with = "data")]
    pub synthetic: Option<usize>,
    /// Start from (and, for dpo/ipo, use as reference) this checkpoint.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub max_grad_norm: Option<f64>,
    #[arg(long, value_parser = parse_scheduler)]
    pub scheduler: Option<Scheduler>,
    #[arg(long)]
    pub warmup_ratio: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// JSONL of `{"item_id","original","target_type"}`.
    #[arg(long)]
    pub items: PathBuf,
    /// Name recorded in generations.jsonl (default: the checkpoint file stem).
    #[arg(long)]
    pub model_id: Option<String>,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Sample instead of greedy decoding.
    #[arg(long)]
    pub sample: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub generations: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    /// JSONL of `{"item_id","reference"}`; enables BLEU/ROUGE and correlations.
    #[arg(long)]
    pub references: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PtdEvalArgs {
    /// Gold sentence pairs (pairs.jsonl).
    #[arg(long)]
    pub gold: PathBuf,
    /// Detector output (ptd_preds.jsonl).
    #[arg(long, required_unless_present = "heuristic")]
    pub preds: Option<PathBuf>,
    /// Score the rule-based detector on the gold pairs instead.
    #[arg(long, conflicts_with = "preds")]
    pub heuristic: bool,
    /// Probability threshold for logit predictions.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directory to summarize (searched one level deep).
    pub run: PathBuf,
}
