//! `taskforge`: enumerate tasks, generate datasets, compile factual tasks
//! to SPARQL and score prediction files.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.

mod commands;
mod config;
mod stores;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use stores::StoreArgs;

#[derive(Parser, Debug)]
#[command(name = "taskforge", version, about = "Procedural word and sequence task benchmarks")]
struct Cli {
    /// TOML file setting any flag; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
#[command(args_override_self = true)]
enum Command {
    /// Write the canonical depth-two task list.
    Enumerate(EnumerateArgs),
    /// Build one dataset per task.
    Generate(GenerateArgs),
    /// Write the SPARQL queries of a factual task.
    CompileSparql(CompileArgs),
    /// Score predictions or fit composition regressions.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct EnumerateArgs {
    /// Catalog TSV; the built-in catalog when absent.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub limit: usize,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub stores: StoreArgs,
    /// Task expression; may be repeated.
    #[arg(long = "task")]
    pub tasks: Vec<String>,
    /// File with one task expression per line.
    #[arg(long = "task-list")]
    pub task_list: Option<PathBuf>,
    /// Build the balanced training set of `union(F_E, F_H)` instead.
    #[arg(long = "balanced-union", num_args = 2, value_names = ["F_E", "F_H"])]
    pub balanced_union: Option<Vec<String>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "train-size", default_value_t = 1000)]
    pub train_size: usize,
    #[arg(long = "eval-size", default_value_t = 500)]
    pub eval_size: usize,
    #[arg(long = "min-examples", default_value_t = 100)]
    pub min_examples: usize,
    #[arg(long = "seq-len", default_value_t = 8)]
    pub seq_len: usize,
    /// Fixed output length of sequential examples; random when absent.
    #[arg(long = "seq-out-len")]
    pub seq_out_len: Option<usize>,
    /// Word boundary token for sequential datasets.
    #[arg(long)]
    pub separator: Option<String>,
    /// Tasks built in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bind {
    Leading,
    Trailing,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct CompileArgs {
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long)]
    pub task: String,
    /// Entity id bound in the function query.
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long, value_enum, default_value_t = Bind::Leading)]
    pub bind: Bind,
    /// `BASE=TERM` property mapping; may be repeated.
    #[arg(long = "property")]
    pub properties: Vec<String>,
    /// Text placed before each `SELECT`.
    #[arg(long, default_value = "")]
    pub prologue: String,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Analysis {
    Adaptability,
    Distribution,
    Composition,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum WhichArg {
    Mem,
    Gen,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub stores: StoreArgs,
    #[arg(long, value_enum, default_value_t = Analysis::Adaptability)]
    pub analysis: Analysis,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = WhichArg::Gen)]
    pub which: WhichArg,
    /// Score whatever predictions exist instead of failing on gaps.
    #[arg(long = "allow-partial")]
    pub allow_partial: bool,
    /// Constituents of the union for the distribution analysis; read from
    /// the dataset's task when absent.
    #[arg(long = "f-e")]
    pub f_e: Option<String>,
    #[arg(long = "f-h")]
    pub f_h: Option<String>,
    /// Composition table: task, function, paradigm, atomic scores, score.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Fit groups with fewer than 20 points.
    #[arg(long)]
    pub force: bool,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    /// `None` when the message has already been printed.
    pub error: Option<anyhow::Error>,
}

pub const USAGE: u8 = 1;
pub const DATA: u8 = 2;
pub const BACKEND: u8 = 3;

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: USAGE, error: Some(error.into()) }
    }

    pub fn data(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: DATA, error: Some(error.into()) }
    }
}

fn run(args: Vec<OsString>) -> Result<(), Failure> {
    let args = config::expand(args, &Cli::command()).map_err(Failure::usage)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => {
            let _ = e.print();
            return Err(Failure { code: USAGE, error: None });
        }
    };
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Enumerate(a) => commands::enumerate(a, config),
        Command::Generate(a) => commands::generate(a, config),
        Command::CompileSparql(a) => commands::compile_sparql(a, config),
        Command::Evaluate(a) => commands::evaluate(a, config),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(e) = f.error {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(f.code)
        }
    }
}
