use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "ami", version, about = "Misogyny identification for English tweets")]
pub struct Cli {
    /// TOML file whose keys fill in any flag not given on the command line.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Raise log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the label distribution of a labelled dataset.
    Stats(StatsArgs),
    /// Fit the feature layout on a training file and dump vectors.
    Featurize(FeaturizeArgs),
    /// Train a Task A or Task B system and save it.
    Train(TrainArgs),
    /// Predict a dataset with a saved system and write a run file.
    Predict(PredictArgs),
    /// Score a run file against gold labels.
    Evaluate(EvaluateArgs),
    /// Train, predict and evaluate in one go.
    Run(RunArgs),
}

#[derive(Debug, Args, Default)]
pub struct StatsArgs {
    #[arg(long, value_name = "TSV")]
    pub data: Option<PathBuf>,
    /// Keep rows whose labels are inconsistent and skip malformed rows.
    #[arg(long)]
    pub lenient: bool,
}

/// Options shared by every command that trains.
#[derive(Debug, Args, Default, Clone)]
pub struct SystemArgs {
    /// A or B.
    #[arg(long)]
    pub task: Option<String>,
    /// lr, gbdt (xgb-like) or cb (cb-like).
    #[arg(long)]
    pub engine: Option<String>,
    /// Task B category engine (defaults to --engine).
    #[arg(long)]
    pub category_engine: Option<String>,
    /// Task B target engine (defaults to --engine).
    #[arg(long)]
    pub target_engine: Option<String>,
    /// Comma separated subset of tfidf,bowv,sentence.
    #[arg(long)]
    pub blocks: Option<String>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct InputArgs {
    #[arg(long, value_name = "TSV")]
    pub train: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub word_embeddings: Option<PathBuf>,
    #[arg(long, value_name = "TSV")]
    pub train_sentence_embeddings: Option<PathBuf>,
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args, Default)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub system: SystemArgs,
    /// Dataset to featurize (defaults to the training file).
    #[arg(long, value_name = "TSV")]
    pub data: Option<PathBuf>,
    /// Sentence embeddings for --data.
    #[arg(long, value_name = "TSV")]
    pub sentence_embeddings: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub system: SystemArgs,
    /// Where to write the trained system.
    #[arg(long, value_name = "JSON")]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct PredictArgs {
    #[arg(long, value_name = "JSON")]
    pub model: Option<PathBuf>,
    #[arg(long, value_name = "TSV")]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub word_embeddings: Option<PathBuf>,
    /// Sentence embeddings for --data.
    #[arg(long, value_name = "TSV")]
    pub sentence_embeddings: Option<PathBuf>,
    /// Run file (stdout when absent).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Per-decision probabilities as TSV.
    #[arg(long, value_name = "TSV")]
    pub probabilities: Option<PathBuf>,
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args, Default)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "TSV")]
    pub gold: Option<PathBuf>,
    #[arg(long, value_name = "TSV")]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub task: Option<String>,
    /// Task B scope: gold-misogynous or all-with-none.
    #[arg(long)]
    pub scope: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, value_name = "TSV")]
    pub test: Option<PathBuf>,
    #[arg(long, value_name = "TSV")]
    pub test_sentence_embeddings: Option<PathBuf>,
    /// Hold out this fraction of the training file when --test is absent.
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub scope: Option<String>,
    /// Also save the trained system here.
    #[arg(long, value_name = "JSON")]
    pub model: Option<PathBuf>,
    /// Run file (stdout when absent).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_name = "TSV")]
    pub probabilities: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}
