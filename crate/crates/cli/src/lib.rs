//! Command-line pipeline over the `ttsprep` library.
//!
//! Settings come from three layers, later ones winning: built-in defaults,
//! the TOML file given with `--config`, then individual flags. Relative paths
//! inside the config file are resolved against the file's directory.
//!
//! Every command is a deterministic function of its inputs, the processing
//! parameters and the seed. Worker count and output location do not enter
//! the recorded config hash and do not change any output byte.

pub mod config;

mod commands;
mod output;
mod pipeline;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;
use ttsprep::curriculum::CurriculumError;
use ttsprep::dataset::DatasetError;
use ttsprep::sampler::SamplerError;
use ttsprep::text_frontend::TextError;

pub use config::{ConfigFile, Overrides, PipelineConfig};
pub use output::{output_stem, TOOL, VERSION};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("manifest {path}: {source}")]
    Manifest { path: PathBuf, source: DatasetError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Curriculum(#[from] CurriculumError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for problems with the invocation itself, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Manifest { .. } => 2,
            _ => 1,
        }
    }
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Outcome {
    /// Items that could not be processed.
    pub failures: usize,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        u8::from(self.failures > 0)
    }
}

#[derive(Debug, Parser)]
#[command(name = "ttsprep", version, about = "Corpus preparation for multi-speaker emotional Korean TTS")]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Input manifest (JSONL).
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for per-utterance commands.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// VAD aggressiveness, 0 (permissive) to 3 (strict).
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(0..=3))]
    pub aggressiveness: Option<u8>,
    /// Vocoder clip length in mel frames.
    #[arg(long, global = true)]
    pub clip_frames: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Remove silence and resample every utterance to 22,050 Hz.
    Prep,
    /// Compute log-mel spectrograms (MEL1) for every utterance.
    Mel,
    /// Convert text to grapheme IDs: the given string, or every transcript in the manifest.
    Text { text: Option<String> },
    /// Hours per speaker and emotion.
    Stats,
    /// Write the curriculum plan and, with a manifest, the per-stage manifests.
    Plan,
    /// Draw balanced batches.
    Sample {
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        batches: Option<usize>,
    },
    /// Report training readiness and export the conditioning layout.
    Validate,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let file = cli.config.as_deref().map(ConfigFile::load).transpose()?;
    let (batch_size, batches) = match &cli.command {
        Command::Sample { batch_size, batches } => (*batch_size, *batches),
        _ => (None, None),
    };
    let cfg = PipelineConfig::resolve(
        file,
        Overrides {
            manifest: cli.manifest,
            out: cli.out,
            seed: cli.seed,
            workers: cli.workers,
            aggressiveness: cli.aggressiveness,
            clip_frames: cli.clip_frames,
            batch_size,
            batches,
        },
    )?;
    match &cli.command {
        Command::Prep => pipeline::prep(&cfg),
        Command::Mel => pipeline::mel(&cfg),
        Command::Text { text } => commands::text(&cfg, text.as_deref()),
        Command::Stats => commands::stats(&cfg),
        Command::Plan => commands::plan(&cfg),
        Command::Sample { .. } => commands::sample(&cfg),
        Command::Validate => commands::validate(&cfg),
    }
}
