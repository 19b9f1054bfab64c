use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "fasthash", version, about = "Supervised hashing with boosted decision trees", args_override_self = true)]
pub struct Cli {
    /// Cap on worker threads (default: all cores). 1 runs sequentially.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Generate Gaussian class clusters.
    Synth(SynthArgs),
    /// Train a hash model.
    Train(TrainArgs),
    /// Encode points with a trained model.
    Encode(EncodeArgs),
    /// Evaluate Hamming ranking of query codes against database codes.
    Eval(EvalArgs),
    /// Print a summary of a model, trace or block dump.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureFormat {
    Binary,
    Csv,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub classes: usize,
    /// Per-coordinate standard deviation around each class centre.
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    /// Dimensions carrying class signal; the rest are noise.
    #[arg(long)]
    pub informative: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Split the first N points off as a training set and the rest as queries.
    #[arg(long)]
    pub train: Option<usize>,
    #[arg(long, value_enum, default_value_t = FeatureFormat::Binary)]
    pub format: FeatureFormat,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// One class label per line.
    #[arg(long, conflicts_with = "tags", required_unless_present = "tags")]
    pub labels: Option<PathBuf>,
    /// One line of space-separated tags per point.
    #[arg(long)]
    pub tags: Option<PathBuf>,
    /// Model output path. A JSON mirror is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Run manifest path (default: <out>.manifest.json).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// TOML file with training settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write per-bit traces to <PREFIX>.objective.csv and <PREFIX>.loss.csv.
    #[arg(long, value_name = "PREFIX")]
    pub trace: Option<PathBuf>,
    /// Dump the inference blocks, one per line.
    #[arg(long)]
    pub blocks: Option<PathBuf>,
    #[command(flatten)]
    pub settings: TrainFlags,
}

#[derive(Debug, Args, Default, Clone)]
pub struct TrainFlags {
    #[arg(long)]
    pub bits: Option<usize>,
    #[arg(long)]
    pub depth: Option<u32>,
    /// Boosting rounds per bit.
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub trim: Option<f64>,
    #[arg(long)]
    pub lazy: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tag_threshold: Option<usize>,
    /// `full`, `auto`, or a number of sampled partners per point.
    #[arg(long)]
    pub pairs: Option<String>,
    #[arg(long)]
    pub min_node: Option<usize>,
    #[arg(long)]
    pub bin_count: Option<usize>,
    #[arg(long)]
    pub max_block_size: Option<usize>,
    #[arg(long)]
    pub outer_passes: Option<usize>,
    /// `random` or `all-positive`.
    #[arg(long)]
    pub init: Option<String>,
    /// `dissimilar` or `undefined` for pairs sharing too few tags.
    #[arg(long)]
    pub partial_overlap: Option<String>,
    #[arg(long)]
    pub permanent_trim: bool,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Database codes.
    #[arg(long)]
    pub db: PathBuf,
    /// Query codes.
    #[arg(long)]
    pub query: PathBuf,
    #[arg(long, requires = "query_labels", conflicts_with_all = ["db_tags", "query_tags"])]
    pub db_labels: Option<PathBuf>,
    #[arg(long, requires = "db_labels")]
    pub query_labels: Option<PathBuf>,
    #[arg(long, requires = "query_tags")]
    pub db_tags: Option<PathBuf>,
    #[arg(long, requires = "db_tags")]
    pub query_tags: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub tag_threshold: usize,
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    /// Truncate average precision at this rank.
    #[arg(long)]
    pub map_cutoff: Option<usize>,
    /// Metrics JSON path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub per_query: Option<PathBuf>,
    #[arg(long)]
    pub pr_curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(subcommand)]
    pub what: InspectTarget,
}

#[derive(Debug, Subcommand)]
pub enum InspectTarget {
    Model { path: PathBuf },
    Trace { path: PathBuf },
    Blocks { path: PathBuf },
}
