mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wbc_core::dataset::Background;

/// Leukocyte segmentation, feature extraction and random-forest classification.
#[derive(Debug, Parser)]
#[command(name = "wbc", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Run configuration file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Trees per forest.
    #[arg(long, global = true)]
    pub trees: Option<usize>,
    /// Cross-validation folds.
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    /// Largest `mtry` in the grid search (the grid is 1..=N).
    #[arg(long, global = true)]
    pub grid_max: Option<usize>,
    /// Output file or directory; falls back to `out` in the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment images and write one mask per input.
    Segment {
        /// Image files or directories of images.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Also write every intermediate stage.
        #[arg(long)]
        trace: bool,
    },
    /// Build the 24-column feature matrix for a manifest or an image folder.
    Extract {
        /// A manifest CSV, or a dataset directory combined with `--layout`.
        input: PathBuf,
        /// How labels are read from a directory: suffix-digit or class-folders.
        #[arg(long, default_value = "suffix-digit")]
        layout: String,
    },
    /// Split, tune `mtry` by cross-validation and fit the final forest.
    Train { matrix: PathBuf },
    /// Score a model and write the evaluation report.
    Evaluate {
        model: PathBuf,
        matrix: PathBuf,
        /// Split file written by `train`; without it every row is scored.
        #[arg(long)]
        split: Option<PathBuf>,
    },
    /// Generate a synthetic labelled dataset.
    Phantom {
        #[command(flatten)]
        phantom: PhantomArgs,
    },
    /// phantom, extract, train and evaluate in one go.
    Pipeline {
        #[command(flatten)]
        phantom: PhantomArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct PhantomArgs {
    /// Phantom spec file (`key = value` lines).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Recipes as `HEALTHY,MALIGNANT`, each one of round-dark,
    /// irregular-light, round-light, irregular-dark.
    #[arg(long)]
    pub classes: Option<String>,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, value_parser = parse_background)]
    pub background: Option<Background>,
}

fn parse_background(s: &str) -> Result<Background, String> {
    match s {
        "tissue" => Ok(Background::Tissue),
        "black" => Ok(Background::Black),
        "alternate" => Ok(Background::Alternate),
        _ => Err(format!(
            "unknown background {s:?}; expected tissue, black or alternate"
        )),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
