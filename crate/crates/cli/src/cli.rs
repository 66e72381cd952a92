use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ptq_core::abtest::{Denominator, DEFAULT_SIGNIFICANCE};
use ptq_core::evaluation::{ScorerKind, DEFAULT_SPLITS, DEFAULT_TRAIN_FRACTION};
use ptq_core::Strategy;

#[derive(Debug, Parser)]
#[command(
    name = "ptq",
    version,
    about = "Problem-token selection and display-order experiments"
)]
pub struct Cli {
    /// Suppress the summary on standard output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic survey data from a TOML experiment config.
    Generate(GenerateArgs),
    /// Select a token subset and write its trace.
    Select(SelectArgs),
    /// Score strategies by hold-out AUC and Jaccard redundancy.
    Evaluate(EvaluateArgs),
    /// Compare token response rates between two arms.
    Abtest(AbtestArgs),
    /// Audit information-gain monotonicity and submodularity.
    Audit(AuditArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerArg {
    Table,
    Forest,
}

impl From<ScorerArg> for ScorerKind {
    fn from(s: ScorerArg) -> Self {
        match s {
            ScorerArg::Table => ScorerKind::Table,
            ScorerArg::Forest => ScorerKind::Forest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DenominatorArg {
    Displays,
    Responders,
}

impl From<DenominatorArg> for Denominator {
    fn from(d: DenominatorArg) -> Self {
        match d {
            DenominatorArg::Displays => Denominator::Displays,
            DenominatorArg::Responders => Denominator::Responders,
        }
    }
}

/// Where to read a dataset and its token catalog from.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset file (.csv, or .jsonl/.json).
    #[arg(long)]
    pub input: PathBuf,
    /// Token catalog CSV. Defaults to `catalog.csv` next to the input, then
    /// the built-in catalog.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FileFormat,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value = "rits")]
    pub strategy: Strategy,
    /// Required by `random` and `auc_greedy`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Splits used to rank tokens for `auc_greedy`.
    #[arg(long, default_value_t = DEFAULT_SPLITS)]
    pub splits: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "rits,auc_greedy,random")]
    pub strategies: Vec<Strategy>,
    /// Largest subset size; defaults to the catalog size, capped at 20.
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SPLITS)]
    pub splits: usize,
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
    pub train_frac: f64,
    #[arg(long, value_enum, default_value = "table")]
    pub scorer: ScorerArg,
    /// Trees per forest when `--scorer forest`.
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AbtestArgs {
    #[arg(long)]
    pub control: PathBuf,
    #[arg(long)]
    pub treatment: PathBuf,
    /// Token catalog CSV shared by both arms.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "displays")]
    pub denominator: DenominatorArg,
    #[arg(long, default_value_t = DEFAULT_SIGNIFICANCE)]
    pub significance: f64,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Submodularity excess tolerated before a trial counts as a violation.
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
}
