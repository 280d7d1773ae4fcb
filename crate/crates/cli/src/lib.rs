//! File formats and the `smtplace` command-line front end for
//! `smtplace-core`.
//!
//! Formats:
//! - placement CSV ([`dataset`]),
//! - run configuration JSON ([`config`]),
//! - model and split manifest JSON ([`modelfile`]),
//! - evaluation report JSON / text and residual CSV ([`report`]),
//! - optimization recommendations JSON / CSV and ES trace CSV ([`commands`]).

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod files;
pub mod modelfile;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use smtplace_core::ModelKind;

pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "smtplace",
    version,
    about = "Predict-then-optimize placement for SMT chip components"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Svr,
    Rfr,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Svr => ModelKind::Svr,
            KindArg::Rfr => ModelKind::Rfr,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed for every random stream (overrides seeds in the config file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run configuration JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic dataset (dataset.csv + dataset.meta.json).
    Generate {
        #[command(flatten)]
        common: Common,
        /// Records per component directory (default 660).
        #[arg(long)]
        records_per_type: Option<usize>,
    },
    /// Split a labeled dataset 70:10:20 and fit one model per target.
    Train {
        /// Labeled placement CSV.
        data: PathBuf,
        /// Model kind; both kinds when omitted.
        #[arg(long, value_enum)]
        model: Option<KindArg>,
        #[command(flatten)]
        common: Common,
    },
    /// Score trained models on the split recorded at training time.
    Evaluate {
        /// The labeled placement CSV the models were trained from.
        data: PathBuf,
        /// Directory holding model files and split.json.
        #[arg(long)]
        models: PathBuf,
        /// Model kind; every kind present when omitted.
        #[arg(long, value_enum)]
        model: Option<KindArg>,
        #[command(flatten)]
        common: Common,
    },
    /// Recommend a placement offset for every context row.
    Optimize {
        /// Context CSV (placement columns are ignored).
        contexts: PathBuf,
        /// Directory holding the model files.
        #[arg(long)]
        models: PathBuf,
        /// Model kind used as the surrogate.
        #[arg(long, value_enum, default_value = "rfr")]
        model: KindArg,
        #[command(flatten)]
        common: Common,
    },
    /// Predict post-reflow offsets for every row of a CSV.
    Predict {
        /// Placement CSV, labeled or not.
        rows: PathBuf,
        /// Directory holding the model files.
        #[arg(long)]
        models: PathBuf,
        /// Model kind to predict with.
        #[arg(long, value_enum, default_value = "rfr")]
        model: KindArg,
        /// Also write predictions.csv into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs one parsed invocation, printing its summary to stdout.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            common,
            records_per_type,
        } => commands::generate(&common, records_per_type),
        Command::Train {
            data,
            model,
            common,
        } => commands::train(&data, model.map(Into::into), &common),
        Command::Evaluate {
            data,
            models,
            model,
            common,
        } => commands::evaluate(&data, &models, model.map(Into::into), &common),
        Command::Optimize {
            contexts,
            models,
            model,
            common,
        } => commands::optimize(&contexts, &models, model.into(), &common),
        Command::Predict {
            rows,
            models,
            model,
            out,
        } => commands::predict(&rows, &models, model.into(), out.as_deref()),
    }
}
