// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line front end: `run`, `drift`, `bench` and `gen`.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use optidrift::evaluation::{EvalError, ExportFormat};
use optidrift::learners::ModelKind;
use optidrift::stream::StreamError;
use thiserror::Error;

use config::{ExperimentConfig, Overrides};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl From<StreamError> for CliError {
    fn from(e: StreamError) -> Self {
        match e {
            StreamError::InvalidConfig(_) => CliError::Config(e.to_string()),
            StreamError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidConfig(_) => CliError::Config(e.to_string()),
            EvalError::Io { .. } | EvalError::Format { .. } => CliError::Io(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "optidrift",
    version,
    about = "Streaming failure detection experiments on optical telemetry"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pretrain on SFD, stream HFD through static and online arms, write reports.
    Run(CommonArgs),
    /// Detect per-class drifts on receiver OSNR across SFD and HFD.
    Drift(CommonArgs),
    /// Measure per-event static and online latency.
    Bench(CommonArgs),
    /// Write the synthetic stream to sfd.csv and hfd.csv.
    Gen(CommonArgs),
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse::<ModelKind>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Root seed; sub-seeds for generation, shuffling and bagging derive from it
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format for series and tables: csv or json
    #[arg(long, value_parser = |s: &str| s.parse::<ExportFormat>())]
    pub format: Option<ExportFormat>,
    /// Comma-separated subset of lr,nb,arf.
    #[arg(long, value_delimiter = ',', value_parser = parse_model)]
    pub models: Option<Vec<ModelKind>>,
    /// Rolling metric window.
    #[arg(long)]
    pub window: Option<usize>,
    /// Latency trials.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Do not print the summary.
    #[arg(long)]
    pub quiet: bool,
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply(&Overrides {
            seed: self.seed,
            out_dir: self.out.clone(),
            format: self.format,
            models: self.models.clone(),
            window: self.window,
            trials: self.trials,
        });
        Ok(cfg)
    }
}

type CommandFn = fn(&ExperimentConfig) -> Result<commands::Outcome, CliError>;

/// Runs a parsed command, printing its summary; returns the exit code.
pub fn execute(cli: &Cli) -> i32 {
    let (args, f): (&CommonArgs, CommandFn) = match &cli.command {
        Command::Run(a) => (a, commands::cmd_run),
        Command::Drift(a) => (a, commands::cmd_drift),
        Command::Bench(a) => (a, commands::cmd_bench),
        Command::Gen(a) => (a, commands::cmd_gen),
    };
    let result = args.resolve().and_then(|cfg| f(&cfg).map(|o| (o, cfg.format)));
    match result {
        Ok((outcome, format)) => {
            if !args.quiet {
                print!("{}", outcome.render(format));
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
