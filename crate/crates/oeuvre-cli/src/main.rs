//! Command-line pipeline: generate → ingest → block → disambiguate →
//! evaluate → fit → report.
//!
//! Exit codes: 0 success, 1 validation problems (bad files, parameters,
//! unknown flags), 2 internal invariant violations.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod manifest;

#[derive(Debug, Parser)]
#[command(
    name = "oeuvre",
    version,
    about = "Author name disambiguation toolkit: blocking, five clustering strategies, evaluation, threshold fitting, and synthetic gold corpora"
)]
struct Cli {
    /// Output directory for the subcommand's products.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for block-level parallelism (default: all cores).
    /// Results are identical for any value.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed override for `generate`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rule-score and general-name config (flat `key = integer` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// papers.jsonl path.
    #[arg(long)]
    papers: PathBuf,
    /// mentions.jsonl path.
    #[arg(long)]
    mentions: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus with ground-truth author ids.
    Generate {
        /// Generator spec (TOML); defaults are used when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Validate a corpus and print its statistics.
    Ingest {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Partition mentions into name blocks.
    Block {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Keep only blocks with at least this many distinct gold authors
        /// (0 keeps everything).
        #[arg(long, default_value_t = 0)]
        min_authors: usize,
    },
    /// Cluster every block with one algorithm.
    Disambiguate {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// baseline, cota, schulz, caron, or backes.
        #[arg(long)]
        algorithm: String,
        /// Parameter file (TOML); algorithm defaults are used when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Also write merge-trace CSVs (trace-producing algorithms only).
        #[arg(long, default_value_t = false)]
        traces: bool,
    },
    /// Score a disambiguation run against the gold annotations.
    Evaluate {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Directory of per-block clustering CSVs from `disambiguate`.
        #[arg(long)]
        clusters: PathBuf,
        /// Row label; defaults to the run's algorithm name.
        #[arg(long)]
        label: Option<String>,
        /// Evaluate only blocks with at least this many distinct gold
        /// authors (0 evaluates every gold-annotated block).
        #[arg(long, default_value_t = 0)]
        min_authors: usize,
    },
    /// Fit decision thresholds by exhaustive candidate evaluation.
    Fit {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        algorithm: String,
        /// Candidate grid (TOML); built-in defaults when omitted.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// f1_pair or f1_best.
        #[arg(long, default_value = "f1_pair")]
        objective: String,
        /// global, classes, or flexible.
        #[arg(long, default_value = "global")]
        mode: String,
        /// Fit on blocks with at least this many distinct gold authors.
        #[arg(long, default_value_t = 5)]
        min_authors: usize,
    },
    /// Join evaluation outputs into comparison tables.
    Report {
        /// Evaluation output directories.
        #[arg(long, required = true, num_args = 1..)]
        evals: Vec<PathBuf>,
    },
    /// Emit per-block specificity token weights for inspection.
    DumpWeights {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Canonical block key, e.g. "wang, y".
        #[arg(long)]
        block: String,
    },
}

/// Errors carrying their exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: files, flags, parameters, grids. Exit 1.
    Validation(String),
    /// A violated internal invariant, named. Exit 2.
    Invariant(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "{msg}"),
            CliError::Invariant(msg) => write!(f, "invariant violated: {msg}"),
        }
    }
}

impl CliError {
    fn validation(err: impl std::fmt::Display) -> CliError {
        CliError::Validation(err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap's rendered message includes usage; all parse problems
            // are validation errors here
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };

    let jobs = cli.jobs;
    let outcome = oeuvre::par::with_jobs(jobs, || commands::run(cli));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Invariant(msg)) => {
            eprintln!("error: invariant violated: {msg}");
            ExitCode::from(2)
        }
    }
}
