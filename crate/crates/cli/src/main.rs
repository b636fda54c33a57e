//! `sparsedit` command-line tool.

mod commands;
mod config;
mod run;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

/// A failed command: message plus exit code (1 validation, 2 usage/IO).
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self::usage(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<sparsedit::ingest::IngestError> for CliError {
    fn from(e: sparsedit::ingest::IngestError) -> Self {
        use sparsedit::ingest::IngestError::*;
        match e {
            Io(_) => Self::usage(e.to_string()),
            MalformedDump { .. } => Self::validation(e.to_string()),
        }
    }
}

impl From<sparsedit::cluster::ClusterError> for CliError {
    fn from(e: sparsedit::cluster::ClusterError) -> Self {
        match e {
            sparsedit::cluster::ClusterError::Io(_) => Self::usage(e.to_string()),
            _ => Self::validation(e.to_string()),
        }
    }
}

impl From<sparsedit::encoder::EncoderError> for CliError {
    fn from(e: sparsedit::encoder::EncoderError) -> Self {
        use sparsedit::encoder::EncoderError::*;
        match e {
            Io(_) | Checkpoint(_) => Self::usage(e.to_string()),
            _ => Self::validation(e.to_string()),
        }
    }
}

impl From<sparsedit::metrics::MetricsError> for CliError {
    fn from(e: sparsedit::metrics::MetricsError) -> Self {
        Self::validation(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "sparsedit", version, about = "Intent-conditioned text editing with sparse experts")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
pub struct Global {
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the top-level seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Mine sentence pairs from a revision dump (MediaWiki XML or JSONL).
    Ingest(commands::IngestArgs),
    /// Cluster edit comments and split pairs into per-intent corpora.
    Cluster(commands::ClusterArgs),
    /// Align sentence pairs into tag/insertion training records.
    Annotate(commands::AnnotateArgs),
    /// Write the synthetic four-intent corpus.
    Synth(commands::SynthArgs),
    /// Train an encoder from training records.
    Train(commands::TrainArgs),
    /// Add intents by cloning an expert and training only expert weights.
    Finetune(commands::FinetuneArgs),
    /// Edit text line by line with a trained model.
    Edit(commands::EditArgs),
    /// Score predictions with SARI, GLEU and exact match.
    Eval(commands::EvalArgs),
    /// Check analytic gradients against finite differences.
    Gradcheck(commands::GradcheckArgs),
}

fn effective_config(g: &Global) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(g.config.as_deref())?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = effective_config(&cli.global)?;
    if cli.global.print_config {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
        return Ok(());
    }
    match cli.command {
        Command::Ingest(a) => commands::ingest(&cfg, a),
        Command::Cluster(a) => commands::cluster(&cfg, a),
        Command::Annotate(a) => commands::annotate(&cfg, a),
        Command::Synth(a) => commands::synth(&cfg, a),
        Command::Train(a) => commands::train(&cfg, a),
        Command::Finetune(a) => commands::finetune(&cfg, a),
        Command::Edit(a) => commands::edit(&cfg, a),
        Command::Eval(a) => commands::eval(&cfg, a),
        Command::Gradcheck(a) => commands::gradcheck(&cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
