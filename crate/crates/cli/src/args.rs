use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "screenwise", version, about = "Guideline rules, synthetic cases and LLM screening experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rule pack utilities.
    Rules {
        #[command(subcommand)]
        action: RulesAction,
    },
    /// Generate a JSON Lines cases file.
    Gen(GenArgs),
    /// Load the rules into a backend, query every case and score the answers.
    Run(Box<RunArgs>),
    /// Re-emit the reports of a finished run.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum RulesAction {
    /// Parse and validate a rule pack.
    Check {
        /// Rule pack file; the bundled pack when omitted.
        #[arg(long)]
        rules: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(1..))]
    pub count: u32,
    #[arg(long)]
    pub out: PathBuf,
}

/// Every field is optional so the config file and environment can fill gaps.
#[derive(Debug, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub cases: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub count: Option<u32>,
    /// Seed for picking narrative templates; defaults to the case seed.
    #[arg(long)]
    pub template_seed: Option<u64>,
    /// structured, unstructured, both or paired.
    #[arg(long)]
    pub mode: Option<String>,
    /// Shorthand for `--mode paired`.
    #[arg(long, conflicts_with = "mode")]
    pub paired: bool,
    /// remote, mock-perfect or mock-noisy.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Per-request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub noise_profile: Option<PathBuf>,
    /// Parent directory; each run gets its own subdirectory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub fresh_per_case: bool,
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// Directory with prompt template files; the built-in set when omitted.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    /// Run the two arms on concurrent sessions.
    #[arg(long)]
    pub parallel_sessions: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A run directory holding report.json.
    #[arg(long)]
    pub run_dir: PathBuf,
    /// Print one format to stdout instead of rewriting report.md and report.csv.
    #[arg(long)]
    pub format: Option<String>,
}
