//! Run configuration: built-in defaults, then the TOML file, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use ttsprep::features::{MelConfig, SpectrogramConfig};
use ttsprep::sampler::{ClipSpec, DEFAULT_CLIP_FRAMES};
use ttsprep::vad::VadConfig;
use ttsprep::CANONICAL_SAMPLE_RATE;

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub seed: u64,
    pub clip_frames: u64,
    pub batch_size: usize,
    pub batches: usize,
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self { seed: 0, clip_frames: DEFAULT_CLIP_FRAMES, batch_size: 64, batches: 100 }
    }
}

/// On-disk layout of the config file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub paths: PathsSection,
    pub run: RunSection,
    pub vad: VadConfig,
    pub spectrogram: SpectrogramConfig,
    pub mel: MelConfig,
    pub sampler: SamplerSection,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })?;
        // relative paths in the file are relative to the file itself
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.paths.manifest, &mut cfg.paths.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Values given on the command line; each one replaces the config file's.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub aggressiveness: Option<u8>,
    pub clip_frames: Option<u64>,
    pub batch_size: Option<usize>,
    pub batches: Option<usize>,
}

/// Everything that can change the content of an output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessingParams {
    pub sample_rate: u32,
    pub vad: VadConfig,
    pub spectrogram: SpectrogramConfig,
    pub mel: MelConfig,
    pub clip: ClipSpec,
    pub seed: u64,
    pub batch_size: usize,
    pub batches: usize,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: usize,
    pub params: ProcessingParams,
}

impl PipelineConfig {
    pub fn resolve(file: Option<ConfigFile>, flags: Overrides) -> Result<Self, CliError> {
        let file = file.unwrap_or_default();
        let mut vad = file.vad;
        if let Some(a) = flags.aggressiveness {
            vad.aggressiveness = a;
        }
        let cfg = Self {
            manifest: flags.manifest.or(file.paths.manifest),
            out: flags.out.or(file.paths.out),
            workers: flags.workers.or(file.run.workers).unwrap_or_else(default_workers),
            params: ProcessingParams {
                sample_rate: CANONICAL_SAMPLE_RATE,
                vad,
                spectrogram: file.spectrogram,
                mel: file.mel,
                clip: ClipSpec { clip_frames: flags.clip_frames.unwrap_or(file.sampler.clip_frames) },
                seed: flags.seed.unwrap_or(file.sampler.seed),
                batch_size: flags.batch_size.unwrap_or(file.sampler.batch_size),
                batches: flags.batches.unwrap_or(file.sampler.batches),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.workers == 0 {
            return usage("--workers must be at least 1".into());
        }
        let p = &self.params;
        p.vad.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        p.spectrogram.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        p.mel.validate(p.sample_rate).map_err(|e| CliError::Usage(e.to_string()))?;
        if p.clip.clip_frames == 0 {
            return usage("--clip-frames must be at least 1".into());
        }
        if p.batch_size == 0 {
            return usage("batch size must be at least 1".into());
        }
        Ok(())
    }

    /// SHA-256 of the processing parameters; paths and worker count are
    /// excluded so they cannot change provenance.
    pub fn params_sha256(&self) -> String {
        sha256_hex(&serde_json::to_vec(&self.params).expect("parameters serialize"))
    }

    pub fn manifest_path(&self) -> Result<&Path, CliError> {
        let p = self.manifest.as_deref().ok_or_else(|| CliError::Usage("no manifest given (--manifest)".into()))?;
        if !p.is_file() {
            return Err(CliError::Usage(format!("manifest {} not found", p.display())));
        }
        Ok(p)
    }

    pub fn out_dir(&self) -> Result<&Path, CliError> {
        self.out.as_deref().ok_or_else(|| CliError::Usage("no output directory given (--out)".into()))
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
