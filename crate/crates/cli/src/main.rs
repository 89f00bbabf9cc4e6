//! `discoctx`: run context-aware discourse relation classification
//! experiments from the command line.

mod commands;
mod config;
mod error;
mod experiment;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use discoctx::context::ContextScheme;
use discoctx::treebank::Split;

use crate::config::CorpusFormat;

#[derive(Debug, Parser)]
#[command(name = "discoctx", version, about = "Discourse relation classification with structured context")]
pub struct Cli {
    /// Experiment config file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seeds, comma separated; each seed is one run.
    #[arg(long = "seeds", visible_alias = "seed", global = true, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Context scheme: default, ADn or ORn.
    #[arg(long, global = true)]
    pub scheme: Option<ContextScheme>,
    /// Corpus split: train, dev or test.
    #[arg(long, global = true)]
    pub split: Option<Split>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Directory holding train/, dev/ and test/ subdirectories.
    pub corpus: PathBuf,
    /// Corpus name used in reports (defaults to the directory name).
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, value_enum, default_value_t = CorpusFormat::Dep)]
    pub format: CorpusFormat,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BackendArg {
    Majority,
    Cue,
    Endpoint,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LevelArg {
    Instance,
    Type,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DeltaArg {
    PerRun,
    PerSupport,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a corpus, print counts, optionally save a
    /// normalized copy to --out.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Keep going when documents fail validation.
        #[arg(long)]
        lenient: bool,
    },
    /// Report validation violations; exit 1 if there are any.
    Validate {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Dependency distance statistics in EDUs and sentences.
    Stats {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        lenient: bool,
    },
    /// Render one split under one context scheme as JSONL.
    Variants {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Prefix ancestor context fragments with their relation.
        #[arg(long)]
        relations: bool,
    },
    /// Predict labels for a variant file.
    Infer {
        /// Variant file to classify.
        #[arg(long)]
        eval: PathBuf,
        /// Training variant file (baselines and ICL examples).
        #[arg(long)]
        train: PathBuf,
        #[arg(long, value_enum)]
        backend: BackendArg,
        /// Model tag in the condition; defaults to the backend or model name.
        #[arg(long)]
        tag: Option<String>,
        /// Baselines train on this share of the training file per seed.
        #[arg(long, default_value_t = 1.0)]
        train_fraction: f64,
        #[arg(long)]
        base_url: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        parallelism: Option<usize>,
        #[arg(long)]
        max_retries: Option<u32>,
        /// Environment variable holding the API token.
        #[arg(long)]
        token_env: Option<String>,
        /// Send no Authorization header.
        #[arg(long)]
        no_auth: bool,
    },
    /// Score prediction files against a variant file.
    Evaluate {
        #[arg(long)]
        eval: PathBuf,
        #[arg(required = true)]
        predictions: Vec<PathBuf>,
    },
    /// Wilcoxon signed-rank test of condition B against condition A, runs
    /// paired by run id.
    Compare {
        #[arg(long)]
        eval: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        a: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        b: Vec<PathBuf>,
        /// Bonferroni family size.
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = discoctx::evaluation::DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Win/loss/tie margins per relation and connective match rates.
    Analyze {
        #[arg(long)]
        eval: PathBuf,
        /// Reference condition predictions.
        #[arg(long, num_args = 1.., required = true)]
        a: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        b: Vec<PathBuf>,
        /// Connective list; the built-in lexicon otherwise.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = LevelArg::Instance)]
        level: LevelArg,
        /// Match the longest multiword connective at the start of arg2.
        #[arg(long)]
        multiword: bool,
        #[arg(long, value_enum, default_value_t = DeltaArg::PerRun)]
        delta: DeltaArg,
    },
    /// Run the full pipeline described by --config.
    Experiment,
    /// Print the results table of an experiment output directory.
    Table {
        /// Experiment output directory (or use --out).
        dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
