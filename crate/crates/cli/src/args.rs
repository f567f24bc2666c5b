use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use depsemble::{DiversityMetric, FleissForm, Objective, SelectionMethod};

#[derive(Debug, Parser)]
#[command(name = "depsemble", version, about = "Ensembles of dependency parsers")]
pub struct Cli {
    /// Worker threads for per-sentence decoding (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Combine aligned parser outputs into one parse per sentence.
    Aggregate(AggregateArgs),
    /// Score predicted parses against gold.
    Evaluate(EvaluateArgs),
    /// Diversity of a set of parser outputs.
    Diversity(DiversityArgs),
    /// Choose ensemble members.
    Select(SelectArgs),
    /// Ensemble UAS of every prefix of the given inputs.
    Curve(CurveArgs),
    /// Randomized comparison of the decoders against exhaustive oracles.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ObjectiveArg {
    Uas,
    F1,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Uas => Objective::Uas,
            ObjectiveArg::F1 => Objective::F1,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    SocietyEntropy,
    Disagreement,
    KwVariance,
    FleissKappa,
    Kuncheva,
    Pcdm,
}

impl From<MetricArg> for DiversityMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::SocietyEntropy => DiversityMetric::SocietyEntropy,
            MetricArg::Disagreement => DiversityMetric::Disagreement,
            MetricArg::KwVariance => DiversityMetric::KwVariance,
            MetricArg::FleissKappa => DiversityMetric::FleissKappa,
            MetricArg::Kuncheva => DiversityMetric::Kuncheva,
            MetricArg::Pcdm => DiversityMetric::Pcdm,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FleissArg {
    AsPrinted,
    Classic,
}

impl From<FleissArg> for FleissForm {
    fn from(f: FleissArg) -> Self {
        match f {
            FleissArg::AsPrinted => FleissForm::AsPrinted,
            FleissArg::Classic => FleissForm::Classic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    DiversityObjective,
    QualityOnly,
    EnsembleValidation,
}

impl From<MethodArg> for SelectionMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::DiversityObjective => SelectionMethod::DiversityObjective,
            MethodArg::QualityOnly => SelectionMethod::QualityOnly,
            MethodArg::EnsembleValidation => SelectionMethod::EnsembleValidation,
        }
    }
}

#[derive(Debug, Args)]
pub struct DiversityOptions {
    #[arg(long, value_enum, default_value = "society-entropy")]
    pub metric: MetricArg,

    /// Logarithm base for society entropy: `e`, `2`, or any number above 1.
    #[arg(long, default_value = "e", value_parser = parse_log_base)]
    pub log_base: f64,

    #[arg(long, value_enum, default_value = "as-printed")]
    pub fleiss_form: FleissArg,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,

    /// Comma-separated weights, one per input (decimals or fractions like 2/3).
    #[arg(long, value_delimiter = ',', conflicts_with = "weights_from_gold")]
    pub weights: Option<Vec<String>>,

    /// Weight each input by its UAS on this gold file.
    #[arg(long)]
    pub weights_from_gold: Option<PathBuf>,

    /// Decimal digits kept in weights derived from gold.
    #[arg(long, default_value_t = 3)]
    pub weight_digits: u32,

    #[arg(long, value_enum, default_value = "uas")]
    pub objective: ObjectiveArg,

    /// Output file (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,

    #[arg(long)]
    pub gold: PathBuf,

    #[arg(long, value_enum, default_value = "uas")]
    pub metric: ObjectiveArg,

    /// Also report UAS per gold POS tag.
    #[arg(long)]
    pub by_pos: bool,
}

#[derive(Debug, Args)]
pub struct DiversityArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,

    #[arg(long)]
    pub gold: Option<PathBuf>,

    #[command(flatten)]
    pub options: DiversityOptions,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// A directory of `.conllu` files or a list of files.
    #[arg(long, num_args = 1.., required = true)]
    pub candidates: Vec<PathBuf>,

    #[arg(long)]
    pub gold: PathBuf,

    #[arg(long, value_enum, default_value = "diversity-objective")]
    pub method: MethodArg,

    #[command(flatten)]
    pub options: DiversityOptions,

    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    /// Run the selection for every alpha in 0.0, 0.1, ..., 5.0 instead.
    #[arg(long, conflicts_with_all = ["alpha", "method"])]
    pub sweep: bool,

    #[arg(long)]
    pub size: usize,

    /// Output file (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,

    #[arg(long)]
    pub gold: PathBuf,

    #[arg(long, value_enum, default_value = "uas")]
    pub objective: ObjectiveArg,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 6)]
    pub max_len: usize,

    #[arg(long, default_value_t = 200)]
    pub cases: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_log_base(s: &str) -> Result<f64, String> {
    let base = match s {
        "e" => std::f64::consts::E,
        _ => s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"))?,
    };
    if base > 1.0 && base.is_finite() {
        Ok(base)
    } else {
        Err(format!("log base must exceed 1, got {s}"))
    }
}
