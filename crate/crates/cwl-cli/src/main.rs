use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

mod assemble;
mod commands;
mod config;
mod error;
mod report;

use commands::RunCtx;
use config::{default_config, digest, load, ValueMode};
use error::CliError;
use report::ReportCtx;

/// Desk-scale experiments with random walks on coset spaces.
#[derive(Debug, Parser)]
#[command(name = "cwl", version, max_term_width = 100)]
struct Cli {
    /// JSON experiment config (required for walk, spectral, growth,
    /// classify-free, and norms)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory for CSV/JSON artifacts (default: config out-dir, else ".")
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads (pipelines currently run on one)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Override the config seed
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Force exact rational arithmetic
    #[arg(long, global = true, conflicts_with = "float")]
    exact: bool,

    /// Force f64 arithmetic
    #[arg(long, global = true)]
    float: bool,

    /// Override the support-size budget
    #[arg(long, global = true, value_name = "N")]
    budget_elems: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convolve the step measure and track entropy along the walk
    Walk,
    /// Estimate q-norm decay exponents and the entropy lower bound
    Spectral,
    /// Count balls in group, coset, and subgroup metrics and classify them
    Growth,
    /// Decide the finite-index / cyclic / infinite-index trichotomy for a
    /// finitely generated subgroup of a free group
    ClassifyFree,
    /// Test a rapid-decay witness against a family of functions
    Norms,
    /// Re-derive a named worked example from scratch and check it
    Verify {
        /// Example id (defaults to verify.examples from the config)
        example_id: Option<String>,
    },
    /// Summarize the CSV artifacts already in the output directory
    Report,
}

fn needs_config(cmd: &Command) -> bool {
    !matches!(cmd, Command::Verify { .. } | Command::Report)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => load(path)?,
        None => {
            if needs_config(&cli.command) {
                return Err(CliError::Config(
                    "this command needs --config PATH".into(),
                ));
            }
            default_config()
        }
    };

    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.exact {
        config.mode = ValueMode::Exact;
    }
    if cli.float {
        config.mode = ValueMode::Float;
    }
    if let Some(budget) = cli.budget_elems {
        config.budget_elems = budget;
    }
    config.validate().map_err(CliError::Config)?;

    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        if threads > 1 {
            eprintln!("note: pipelines run sequentially; --threads {threads} has no effect");
        }
    }

    let out_dir = cli
        .out
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let cache_dir = std::env::var_os("CWL_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".cwl-cache"));

    let ctx = RunCtx {
        report: ReportCtx {
            out_dir,
            config_digest: digest(&config),
            value_mode: config.mode.name(),
            seed: config.seed,
        },
        cache_dir,
        config,
    };

    match &cli.command {
        Command::Walk => commands::run_walk(&ctx),
        Command::Spectral => commands::run_spectral(&ctx),
        Command::Growth => commands::run_growth(&ctx),
        Command::ClassifyFree => commands::run_classify_free(&ctx),
        Command::Norms => commands::run_norms(&ctx),
        Command::Verify { example_id } => commands::run_verify(&ctx, example_id.as_deref()),
        Command::Report => commands::run_report(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
