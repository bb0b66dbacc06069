//! `vecont`: staged pipeline from corpus to report.

pub mod artifact;
pub mod config;
pub mod error;
pub mod figures;
pub mod fixture;
pub mod report;
pub mod stages;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use vecont_core::extraction::Mode;

use crate::config::{CorpusSource, RunConfig};
use crate::error::CliError;
use crate::stages::{Context, TransportFactory};

#[derive(Debug, Parser)]
#[command(name = "vecont", version, about = "Probe a chat model's notion of genres in a discretised feature space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration.
    #[arg(long, global = true, default_value = "vecont.toml")]
    pub config: PathBuf,
    /// Overrides `llm.mode`: live, record or replay.
    #[arg(long, global = true)]
    pub mode: Option<Mode>,
    /// Overrides `out_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate the synthetic corpus.
    Synth,
    /// Validate and normalise the corpus.
    Ingest,
    /// Fit bin edges, searching the resolution unless fixed.
    Fit,
    /// Count songs and genre labels per occupied bin.
    Index,
    /// Query the model for every genre and formulation.
    Extract,
    /// Spread of each genre's locations against uniform groups.
    Consistency,
    /// Extraction centroids against ground-truth centroids.
    Accuracy,
    /// Agreement of formulation shifts across genres.
    Shift,
    /// Two-dimensional projection, hulls and heatmaps.
    Project,
    /// Tables, figure data and the summary report.
    Report,
    /// Every stage in order.
    All,
}

type Stage = fn(&Context) -> Result<(), CliError>;

const PIPELINE: [(Command, Stage); 10] = [
    (Command::Synth, stages::synth),
    (Command::Ingest, stages::ingest),
    (Command::Fit, stages::fit),
    (Command::Index, stages::index),
    (Command::Extract, stages::extract),
    (Command::Consistency, stages::consistency),
    (Command::Accuracy, stages::accuracy),
    (Command::Shift, stages::shift),
    (Command::Project, stages::project),
    (Command::Report, stages::report),
];

/// Loads the config, applies command-line overrides and runs the command.
pub fn run(cli: &Cli, transport: &TransportFactory) -> Result<(), CliError> {
    let mut config = RunConfig::load(&cli.config)?;
    if let Some(mode) = cli.mode {
        config.llm.mode = mode;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    let ctx = Context::new(config, transport);
    for (command, stage) in PIPELINE {
        let wanted = match cli.command {
            Command::All => !(command == Command::Synth && matches!(ctx.config.corpus, CorpusSource::File(_))),
            c => c == command,
        };
        if wanted {
            log::info!("stage {command:?}");
            stage(&ctx)?;
        }
    }
    Ok(())
}
