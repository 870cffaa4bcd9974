//! `guxas`: synthetic fixtures, feature extraction, affect labeling, GUT
//! prediction and static reports.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

use crate::config::PipelineConfig;

#[derive(Debug, Parser)]
#[command(name = "guxas", version, about = "Game-UX state analysis pipeline")]
struct Cli {
    /// Pipeline configuration (JSON). Missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every module seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrainMode {
    /// Siamese network with the personality branch.
    Siamese,
    /// Weighted cross-entropy classifiers with and without the personality branch.
    Baseline,
    /// All four variants.
    Compare,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the effective configuration as JSON.
    Config,
    /// Generate a physiological session, video recordings and game records.
    Synth {
        /// Session length in seconds; the schedule is clipped to it.
        #[arg(long)]
        duration: Option<f64>,
        /// Number of game records.
        #[arg(long)]
        records: Option<usize>,
    },
    /// Extract sliding, whole-session and video feature CSVs.
    Extract {
        /// Session manifest (.json) or single-table CSV.
        #[arg(long)]
        session: Option<PathBuf>,
        /// Video list (.json) of affect-eliciting recordings.
        #[arg(long)]
        videos: Option<PathBuf>,
    },
    /// Train the affect/flow labeler and write the per-second timeline.
    Label {
        /// Directory holding sliding.csv and whole.csv.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Video feature CSV; defaults to videos.csv next to the features.
        #[arg(long)]
        videos: Option<PathBuf>,
    },
    /// Train a GUT predictor on game records and evaluate it on a held-out split.
    Train {
        #[arg(long)]
        game: Option<PathBuf>,
        /// Timeline used to label records that carry a time but no label.
        #[arg(long)]
        timeline: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = TrainMode::Siamese)]
        mode: TrainMode,
    },
    /// Predict GUT states for game records with a trained model.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        game: Option<PathBuf>,
    },
    /// Render the experience curve, trajectory and affect heat map.
    Report {
        #[arg(long)]
        timeline: Option<PathBuf>,
        #[arg(long)]
        game: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = cli.out {
        cfg.paths.out = Some(out);
    }
    cfg.validate()?;
    let out = cfg.paths.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)?;
    match cli.command {
        Command::Config => commands::config(&cfg, &out),
        Command::Synth { duration, records } => commands::synth(&cfg, &out, duration, records),
        Command::Extract { session, videos } => commands::extract(&cfg, &out, session, videos),
        Command::Label { features, videos } => commands::label(&cfg, &out, features, videos),
        Command::Train { game, timeline, mode } => commands::train(&cfg, &out, game, timeline, mode),
        Command::Predict { model, game } => commands::predict(&cfg, &out, model, game),
        Command::Report { timeline, game } => commands::report(&cfg, &out, timeline, game),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
