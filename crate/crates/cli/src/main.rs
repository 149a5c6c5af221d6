//! `hfnd` — four-class fake-news detection pipeline driver.
//!
//! Exit codes: 0 success, 1 validation error (bad flags, config, or
//! input data), 2 runtime error (I/O, training, rendering).

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

/// Credential variable used by external batch-submission tooling. The
/// CLI itself never reads, transmits, or logs its value.
pub const API_KEY_ENV_VAR: &str = "HFND_OPENAI_API_KEY";

#[derive(Debug, Parser)]
#[command(
    name = "hfnd",
    version,
    about = "Four-class fake-news detection: corpus tooling, machine-paraphrase \
             generation, hierarchical training, and cross-domain evaluation.",
    long_about = None,
    propagate_version = true
)]
pub struct Cli {
    /// TOML run configuration; command-line flags override file values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Flat,
    Hierarchical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Origin,
    Veracity,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a raw dataset and write it back in normalized form.
    Ingest {
        /// Input dataset (.csv or .jsonl).
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Dataset tag applied when the file has no dataset column.
        #[arg(long, value_name = "D1|D2|D3|D4")]
        dataset: Option<String>,
        /// Directory receiving dataset.csv and manifest.json.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Print per-label counts and mean token lengths for a dataset.
    Stats {
        #[arg(long, value_name = "FILE")]
        dataset: PathBuf,
        /// Stopword list file; defaults to the bundled Urdu list.
        #[arg(long, value_name = "FILE")]
        stopwords: Option<PathBuf>,
        /// Short/long boundary in stopword-filtered tokens.
        #[arg(long, value_name = "TOKENS")]
        threshold: Option<f64>,
    },
    /// Stratified 60/20/20 train/dev/test split.
    Split {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "SEED")]
        seed: Option<u64>,
        /// Directory receiving train.csv, dev.csv, test.csv, manifest.json.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Build a chat-completion batch request file for human records.
    ///
    /// Live batch submission is done by external tooling; it reads the
    /// API credential from the HFND_OPENAI_API_KEY environment
    /// variable. This command never reads or logs that variable.
    MgtBuild {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Generation model name recorded in each request body.
        #[arg(long, value_name = "NAME")]
        model: Option<String>,
        #[arg(long, value_name = "N")]
        max_tokens: Option<u32>,
        #[arg(long, value_name = "SEED")]
        seed: Option<u64>,
        /// Apply the anti-hallucination suffix to every prompt.
        #[arg(long)]
        reengineered: bool,
        #[arg(long, value_name = "T")]
        temperature: Option<f64>,
        #[arg(long, value_name = "P")]
        top_p: Option<f64>,
        /// Directory receiving requests.jsonl and manifest.json.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Join batch responses back to their source records.
    MgtIngest {
        /// The dataset the batch was built from.
        #[arg(long, value_name = "FILE")]
        originals: PathBuf,
        /// Downloaded batch output JSONL. Mutually exclusive with --stub.
        #[arg(long, value_name = "FILE", conflicts_with = "stub")]
        responses: Option<PathBuf>,
        /// Answer the requests with the deterministic offline
        /// paraphrase stub instead of downloaded responses.
        #[arg(long, requires = "requests")]
        stub: bool,
        /// Request JSONL (required with --stub).
        #[arg(long, value_name = "FILE")]
        requests: Option<PathBuf>,
        #[arg(long, value_name = "SEED")]
        seed: Option<u64>,
        /// Directory receiving pairs.jsonl, failures.jsonl, manifest.json.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Quality-control generated paraphrases and assign machine labels.
    MgtQc {
        /// pairs.jsonl from mgt-ingest.
        #[arg(long, value_name = "FILE")]
        pairs: PathBuf,
        #[arg(long, value_name = "FILE")]
        originals: PathBuf,
        /// Token-delta failure threshold in percent.
        #[arg(long, value_name = "PCT")]
        threshold: Option<f64>,
        /// Refusal/preface pattern file; defaults to the bundled list.
        #[arg(long, value_name = "FILE")]
        patterns: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        stopwords: Option<PathBuf>,
        /// Directory receiving machine.csv, qc.csv, manifest.json.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Merge a base corpus with extra single-axis training examples.
    Augment {
        #[arg(long, value_name = "FILE")]
        base: PathBuf,
        /// Extra examples (.jsonl of {id, text, origin?, veracity?, provenance}).
        #[arg(long, value_name = "FILE")]
        extra: PathBuf,
        #[arg(long, value_enum)]
        axis: AxisArg,
        /// Directory receiving merged.jsonl and manifest.json.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Train a flat one-vs-rest or hierarchical classifier.
    Train {
        #[arg(long, value_name = "FILE")]
        train: PathBuf,
        #[arg(long, value_name = "FILE")]
        dev: PathBuf,
        #[arg(long, value_enum)]
        kind: Option<ModelKind>,
        #[arg(long, value_name = "FILE")]
        stopwords: Option<PathBuf>,
        /// Comma-separated C grid, e.g. 0.01,0.1,1,10,100.
        #[arg(long, value_name = "LIST")]
        c_grid: Option<String>,
        #[arg(long, value_name = "N")]
        epochs: Option<u32>,
        #[arg(long, value_name = "SEED")]
        seed: Option<u64>,
        #[arg(long, value_name = "N")]
        min_df: Option<usize>,
        #[arg(long, value_name = "N")]
        max_vocab: Option<usize>,
        /// Extra single-axis examples (merged.jsonl); hierarchical only.
        #[arg(long, value_name = "FILE", requires = "augment_axis")]
        augment: Option<PathBuf>,
        #[arg(long, value_enum, requires = "augment")]
        augment_axis: Option<AxisArg>,
        /// Directory receiving model.json and manifest.json.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Evaluate a saved model on a test set and write report.json.
    Evaluate {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "FILE")]
        test: PathBuf,
        /// Test-set name recorded in the report; defaults to the file stem.
        #[arg(long, value_name = "NAME")]
        name: Option<String>,
        /// Directory receiving report.json and manifest.json.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Train the 7 cross-domain configurations and evaluate the 7x7
    /// accuracy matrix. Dataset paths come from the --config file.
    CrossEval {
        #[arg(long, value_enum)]
        kind: Option<ModelKind>,
        /// Worker-thread cap for matrix rows.
        #[arg(long, value_name = "N")]
        jobs: Option<usize>,
        #[arg(long, value_name = "SEED")]
        seed: Option<u64>,
        /// Directory receiving crossdomain.csv, heatmap.svg, manifest.json.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Summarize a run directory: print report tables and render the
    /// cross-domain heatmap from crossdomain.csv.
    Report {
        /// Directory holding report.json and/or crossdomain.csv.
        #[arg(long, value_name = "DIR")]
        run_dir: PathBuf,
        /// Directory receiving summary.txt (and heatmap.svg when a
        /// matrix is present) plus manifest.json.
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
}

/// Errors split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, or input data — exit 1.
    Validation(String),
    /// I/O, training, or rendering failure — exit 2.
    Runtime(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version are successes; any usage problem is a
            // validation failure
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
