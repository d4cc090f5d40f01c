//! Command-line surface for `tnshap`.
//!
//! Data goes to `--out` (or standard output when absent); diagnostics go to
//! standard error under `TNSHAP_LOG`. Every run also writes a manifest,
//! `<out>.manifest.json`, or prints it to standard error when there is no
//! output path.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod instances;
pub mod manifest;

use commands::{bench, explain, fit, gen, rank_sweep, verify};

#[derive(Debug, Parser)]
#[command(name = "tnshap", version, about = "Exact Shapley values and interaction indices on tensor-network surrogates")]
pub struct Cli {
    /// Master RNG seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output path for the command's data.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// JSON file with defaults for any option; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random CP or tree teacher.
    Gen(gen::GenArgs),
    /// Fit a tensor-network student to a teacher.
    Fit(fit::FitArgs),
    /// Attributions of every instance by probe interpolation.
    Explain(explain::ExplainArgs),
    /// Compare interpolation against exhaustive enumeration.
    Verify(verify::VerifyArgs),
    /// Time all-feature Shapley attribution over feature counts.
    Bench(bench::BenchArgs),
    /// Fit students of several ranks and score their attributions.
    RankSweep(rank_sweep::RankSweepArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Fit(_) => "fit",
            Command::Explain(_) => "explain",
            Command::Verify(_) => "verify",
            Command::Bench(_) => "bench",
            Command::RankSweep(_) => "rank-sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    VerificationFailed,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let file = match &cli.config {
        Some(path) => Some(config::load(path)?),
        None => None,
    };
    let globals = config::Globals {
        seed: cli.seed,
        threads: cli.threads,
        out: cli.out.clone(),
    };
    let threads = globals
        .threads
        .or_else(|| file.as_ref().and_then(|f| f.get("threads")).and_then(|v| v.as_u64()).map(|t| t as usize));
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let name = cli.command.name();
    match cli.command {
        Command::Gen(a) => gen::run(name, config::resolve(file.as_ref(), &globals, &a)?),
        Command::Fit(a) => fit::run(name, config::resolve(file.as_ref(), &globals, &a)?),
        Command::Explain(a) => explain::run(name, config::resolve(file.as_ref(), &globals, &a)?),
        Command::Verify(a) => verify::run(name, config::resolve(file.as_ref(), &globals, &a)?),
        Command::Bench(a) => bench::run(name, config::resolve(file.as_ref(), &globals, &a)?),
        Command::RankSweep(a) => rank_sweep::run(name, config::resolve(file.as_ref(), &globals, &a)?),
    }
}
