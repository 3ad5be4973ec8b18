//! The `gsmote` command-line tool.
//!
//! Each subcommand resolves its settings from built-in defaults, an optional
//! `--config` TOML file and command-line flags (flags win), runs, and writes
//! the resolved settings next to its outputs. Feeding that file back through
//! `--config` reproduces the outputs byte for byte.

mod commands;
mod config;
mod error;

use std::ffi::OsString;

use clap::{Parser, Subcommand};

pub use commands::{augment, evaluate, tune, vectorize};
pub use config::{AugmentConfig, EvaluateConfig, TuneConfig, VectorizeConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "gsmote", version, about = "GMM-guided minority oversampling")]
pub struct Cli {
    /// Worker threads for parallel stages. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Oversample the minority class of a CSV dataset.
    Augment(augment::AugmentArgs),
    /// Search GSMOTE parameters with differential evolution.
    Tune(tune::TuneArgs),
    /// Score predictions or train-and-score a classifier.
    Evaluate(evaluate::EvaluateArgs),
    /// Turn text documents into a TF-IDF feature CSV.
    Vectorize(vectorize::VectorizeArgs),
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose);
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .try_init();
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    if cli.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Augment(a) => augment::run(a),
        Command::Tune(a) => tune::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::Vectorize(a) => vectorize::run(a),
    })
}
