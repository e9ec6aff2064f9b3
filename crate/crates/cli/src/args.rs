use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "alquery", version, about = "Batch-mode active-learning query engine")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled synthetic pool of Gaussian clusters.
    Synth(SynthArgs),
    /// Convert IDX image (and label) files into a matrix CSV.
    IngestIdx(IngestIdxArgs),
    /// Fit a linear encoder and write latent embeddings.
    Embed(EmbedArgs),
    /// Run an active-learning experiment and write its JSON log.
    Run(RunArgs),
    /// Turn experiment logs into long-format and difference tables.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::IngestIdx(_) => "ingest-idx",
            Command::Embed(_) => "embed",
            Command::Run(_) => "run",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path.
    #[arg(long)]
    pub out: PathBuf,
    /// File of `key=value` lines supplying defaults for this command's flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 500)]
    pub per_class: usize,
    #[arg(long, default_value_t = 5)]
    pub dims: usize,
    /// Standard deviation of the class centers.
    #[arg(long, default_value_t = 2.0)]
    pub spread: f64,
    /// Within-class standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub cluster_std: f64,
    /// Assign consecutive rows to groups of this size (simulated volumes).
    #[arg(long)]
    pub group_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IngestIdxArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Keep only the first N samples.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EncoderArg {
    Pca,
    Random,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub common: Common,
    /// Matrix CSV with raw features.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = EncoderArg::Pca)]
    pub encoder: EncoderArg,
    #[arg(long, default_value_t = 5)]
    pub n_lat: usize,
    /// Standardize each row before encoding.
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Random,
    Uncertainty,
    Setcover,
    Bsq,
    Upperbound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Sample,
    Group,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BsqModeArg {
    OneShot,
    SequentialRefit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AggregationArg {
    PerDimension,
    ProductGaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReduceArg {
    Mean,
    Max,
    Sum,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    /// Pool matrix CSV (embeddings with labels, optionally groups).
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long, value_enum)]
    pub strategy: StrategyArg,
    /// Initial annotated ids, one per line.
    #[arg(long, conflicts_with = "n_init")]
    pub init_file: Option<PathBuf>,
    /// Draw this many initial samples with imbalanced class priors.
    #[arg(long, default_value_t = 10)]
    pub n_init: usize,
    /// Number of classes whose prior is reduced for the initial draw.
    #[arg(long, default_value_t = 3)]
    pub reduced_classes: usize,
    /// Divisor applied to the reduced priors.
    #[arg(long, default_value_t = 10.0)]
    pub reduction: f64,
    /// Queries per iteration.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Uncertain candidates per iteration: a count or `all`.
    #[arg(long)]
    pub n_unc: Option<String>,
    #[arg(long, default_value_t = 30)]
    pub iters: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Sample)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = BsqModeArg::OneShot)]
    pub bsq_mode: BsqModeArg,
    #[arg(long, value_enum, default_value_t = AggregationArg::PerDimension)]
    pub aggregation: AggregationArg,
    #[arg(long, value_enum, default_value_t = ReduceArg::Mean)]
    pub group_reduce: ReduceArg,
    /// Gaussian kernel width for the logged MMD.
    #[arg(long, default_value_t = 1.0)]
    pub mmd_sigma: f64,
    #[arg(long)]
    pub no_mmd: bool,
    /// Prediction stacks CSV used instead of the built-in proxy learner.
    #[arg(long)]
    pub stacks: Option<PathBuf>,
    /// Binarize prediction stacks before measuring uncertainty.
    #[arg(long)]
    pub binarize: bool,
    #[arg(long, default_value_t = 3)]
    pub proxy_k: usize,
    #[arg(long, default_value_t = 17)]
    pub proxy_models: usize,
    /// Hold out validation and test splits (`pool,val,test` ratios) and log
    /// Dice on the test split.
    #[arg(long)]
    pub holdout: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: Common,
    /// Experiment logs.
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
}
