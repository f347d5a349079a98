//! `defframe`: every pipeline stage as a subcommand.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod commands;
mod manifest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use defframe::frames::RowMask;

#[derive(Parser)]
#[command(name = "defframe", version, about = "Definition Frames pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align relation triples to their sentences and write a CoNLL corpus.
    Align(AlignArgs),
    /// Train the relation tagger on a CoNLL corpus.
    TrainTagger(TrainArgs),
    /// Tag definition sentences and write one frame per line (JSONL).
    Extract(ExtractArgs),
    /// Encode frames into fixed-schema matrices over the basis.
    Encode(EncodeArgs),
    /// Spearman evaluation of basis and frame similarity on benchmarks.
    EvalSim(EvalArgs),
    /// Cross-validated linear transform fit against benchmark gold scores.
    FitTransform(FitArgs),
    /// List the nearest basis terms of every encoded row.
    Decode(DecodeArgs),
}

#[derive(Args)]
struct BasisArgs {
    /// Word vectors in text format, one `token v1 ... vd` per line.
    #[arg(long)]
    basis: PathBuf,
    /// Match tokens case-sensitively instead of lowercasing.
    #[arg(long)]
    keep_case: bool,
}

#[derive(Args)]
struct AlignArgs {
    /// TSV: concept, relation, term, sentence [, POS tags, chunk tags].
    #[arg(long)]
    triples: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Fill missing POS/chunk columns with the built-in heuristic tagger.
    #[arg(long)]
    fallback_tagger: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    #[command(flatten)]
    basis: BasisArgs,
    /// Flat key=value hyperparameters; unset keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed (default 0).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    model: PathBuf,
    /// One `concept TAB sentence` per line.
    #[arg(long)]
    definitions: PathBuf,
    #[command(flatten)]
    basis: BasisArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    frames: PathBuf,
    #[command(flatten)]
    basis: BasisArgs,
    #[arg(long)]
    out: PathBuf,
    /// Rows to keep: DF_all, DF_basic or custom:self,IsA,...; the rest are zeroed.
    #[arg(long, default_value = "DF_all", value_parser = parse_mask)]
    mask: RowMask,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("source").required(true).multiple(true).args(["enc", "basis_only"])))]
struct EvalArgs {
    /// Encoded frames to evaluate.
    #[arg(long)]
    enc: Option<PathBuf>,
    /// Evaluate the basis alone.
    #[arg(long, requires = "basis")]
    basis_only: bool,
    /// Word vectors; adds a basis row next to the frame rows.
    #[arg(long)]
    basis: Option<PathBuf>,
    #[arg(long)]
    keep_case: bool,
    /// Benchmark files (TSV, or CSV by extension).
    #[arg(long, required = true, num_args = 1..)]
    dataset: Vec<PathBuf>,
    /// Row masks for frame rows; repeatable.
    #[arg(long, default_value = "DF_all", value_parser = parse_mask, num_args = 1..)]
    mask: Vec<RowMask>,
    /// Keep only pairs covered by every evaluated representation.
    #[arg(long)]
    intersect: bool,
    /// Add a row scoring each dataset with its own gold values.
    #[arg(long)]
    gold_oracle: bool,
    #[arg(long, default_value_t = 10_000)]
    n_perm: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// TSV report path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    markdown: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Joint {
    Sim,
    Rel,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("source").required(true).multiple(true).args(["enc", "basis"])))]
struct FitArgs {
    #[arg(long)]
    enc: Option<PathBuf>,
    /// Word vectors; adds a basis-mode transform row.
    #[arg(long)]
    basis: Option<PathBuf>,
    #[arg(long)]
    keep_case: bool,
    #[arg(long, required = true, num_args = 1..)]
    dataset: Vec<PathBuf>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fit all datasets as one group (Sim-All or Rel-All).
    #[arg(long, value_enum)]
    joint: Option<Joint>,
    #[arg(long, default_value = "DF_all", value_parser = parse_mask, num_args = 1..)]
    mask: Vec<RowMask>,
    /// Flat key=value fit settings (learning_rate, epochs, init_noise, early_stop_patience, n_perm).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured number of epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Datasets with fewer pairs are rejected.
    #[arg(long, default_value_t = defframe::sim_eval::DEFAULT_MIN_PAIRS)]
    min_pairs: usize,
    /// Label for the basis_name column (defaults to the input file stem).
    #[arg(long)]
    basis_name: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    markdown: Option<PathBuf>,
    /// Directory for transforms refit on all pairs of each dataset.
    #[arg(long)]
    save_transforms: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    enc: PathBuf,
    #[command(flatten)]
    basis: BasisArgs,
    #[arg(short, long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_mask(s: &str) -> Result<RowMask, String> {
    s.parse().map_err(|e: defframe::Error| e.to_string())
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<defframe::Error> for CliError {
    fn from(e: defframe::Error) -> Self {
        match e {
            defframe::Error::Config(_) | defframe::Error::InvalidArgument(_) => CliError::usage(e.to_string()),
            _ => CliError::runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Align(a) => commands::align(a),
        Command::TrainTagger(a) => commands::train_tagger(a),
        Command::Extract(a) => commands::extract(a),
        Command::Encode(a) => commands::encode(a),
        Command::EvalSim(a) => commands::eval_sim(a),
        Command::FitTransform(a) => commands::fit_transform(a),
        Command::Decode(a) => commands::decode(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
