//! Single-binary pipeline driver. Subcommands mirror the pipeline stages;
//! a TOML config file supplies defaults and explicit flags win over it.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 invariant
//! violation.

mod bundles;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use moledit::editing::Task;

#[derive(Debug, Parser)]
#[command(name = "moledit", version, about = "Knowledge editing for toy molecule language models")]
struct Cli {
    /// TOML run configuration; omitted sections fall back to defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum TaskArg {
    Cap,
    Mol,
}

impl From<TaskArg> for Task {
    fn from(value: TaskArg) -> Task {
        match value {
            TaskArg::Cap => Task::CaptionGen,
            TaskArg::Mol => Task::MoleculeGen,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic molecule-caption corpus as JSON Lines.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
        /// Sample count (default from config).
        #[arg(long)]
        size: Option<usize>,
    },
    /// Train a task model on a corpus and save a checkpoint.
    Pretrain {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long)]
        out: PathBuf,
        /// Continue training an existing checkpoint (config hash must match).
        #[arg(long)]
        resume: bool,
    },
    /// Construct the edit/locality/generality benchmark sets.
    BenchBuild {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long)]
        out: PathBuf,
        /// Edit-set score threshold override.
        #[arg(long)]
        low: Option<f64>,
        /// Locality-pool score threshold override.
        #[arg(long)]
        high: Option<f64>,
    },
    /// Apply sequential edits with adapters and the switcher bank.
    Edit {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        bench: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
        /// Comma-separated ablation flags:
        /// no_meka,no_eaes,encoder_only,decoder_only
        #[arg(long, default_value = "")]
        ablate: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate an edited pipeline over a benchmark directory.
    Eval {
        #[arg(long)]
        edited: PathBuf,
        #[arg(long)]
        bench: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long)]
        report: PathBuf,
    },
    /// Expert-activation histogram and switch accuracy of an edited state.
    Rationale {
        #[arg(long)]
        edited: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

/// Error category decides the process exit code.
#[derive(Debug)]
pub enum AppError {
    Data(anyhow::Error),
    Invariant(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Data(_) => 3,
            AppError::Invariant(_) => 4,
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for AppError {
    fn from(value: E) -> Self {
        AppError::Data(value.into())
    }
}

pub type AppResult<T> = Result<T, AppError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            match &err {
                AppError::Data(e) => eprintln!("error: {e:#}"),
                AppError::Invariant(msg) => eprintln!("invariant violation: {msg}"),
            }
            ExitCode::from(err.code())
        }
    }
}

fn run(cli: Cli) -> AppResult<()> {
    let mut run_config = match &cli.config {
        Some(path) => moledit::config::RunConfig::load(path)
            .map_err(|e| AppError::Data(anyhow::anyhow!("{}: {e}", path.display())))?,
        None => moledit::config::RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        run_config.seed = seed;
    }
    if let Some(threads) = cli.threads {
        run_config.threads = threads;
    }

    match cli.command {
        Command::GenCorpus { out, size } => commands::gen_corpus(&run_config, &out, size),
        Command::Pretrain {
            corpus,
            task,
            out,
            resume,
        } => commands::pretrain(&run_config, &corpus, task.into(), &out, resume),
        Command::BenchBuild {
            model,
            corpus,
            task,
            out,
            low,
            high,
        } => {
            let mut thresholds = run_config.bench;
            if let Some(low) = low {
                thresholds.low = low;
            }
            if let Some(high) = high {
                thresholds.high = high;
            }
            commands::bench_build(&run_config, &model, &corpus, task.into(), &out, thresholds)
        }
        Command::Edit {
            model,
            bench,
            task,
            ablate,
            out,
        } => commands::edit(&run_config, &model, &bench, task.into(), &ablate, &out),
        Command::Eval {
            edited,
            bench,
            task,
            report,
        } => commands::eval(&run_config, &edited, &bench, task.into(), &report),
        Command::Rationale { edited, report } => {
            commands::rationale(&run_config, &edited, &report)
        }
    }
}
