//! Command-line front end: `uclso <command> [--config FILE] [--seed N]
//! [--out DIR] [--threads N]`.
//!
//! Exit codes: 0 on success, 1 when a computation fails, 2 for usage,
//! configuration or input errors.

pub mod commands;
pub mod config;
mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "uclso",
    version,
    about = "Cluster-restricted minority oversampling for multi-label data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment config (defaults describe the two-label demo)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; changes speed only
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Dataset statistics before and after label filtering
    Stats,
    /// k-means assignments and centroids
    Cluster,
    /// Per-label synthetic minority points and a count manifest
    Oversample,
    /// Repeated cross-validation of every method, with rank tests
    Experiment,
    /// Write toy datasets as Mulan ARFF + XML
    ToyGen,
}

/// Resolves the config for `cli`: file (or defaults), then flag overrides.
pub fn resolve(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    let out = commands::Output::new(&cfg.out_dir, &cfg);
    let work = || match cli.command {
        Command::Stats => commands::stats(&cfg, &out).map(|csv| print!("{csv}")),
        Command::Cluster => commands::cluster(&cfg, &out),
        Command::Oversample => commands::oversample(&cfg, &out),
        Command::Experiment => commands::experiment(&cfg, &out),
        Command::ToyGen => commands::toy_gen(&cfg, &out).map(|paths| {
            for p in paths {
                println!("{}", p.display());
            }
        }),
    };
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
