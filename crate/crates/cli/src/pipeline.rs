//! Per-utterance audio commands: silence removal and mel extraction.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use ttsprep::audio_io::{decode_wav, encode_wav, resample, AudioBuffer};
use ttsprep::dataset::{CorpusManifest, Utterance, UtteranceFlag};
use ttsprep::features::{encode_mel1, MelExtractor, MelSidecar};
use ttsprep::vad::{remove_silence, VadConfig, VoicedSegment};
use ttsprep::CANONICAL_SAMPLE_RATE;

use crate::config::{sha256_hex, PipelineConfig};
use crate::output::{
    line_numbers, read_file, rebase, resolve_audio, output_stem, write_bytes, write_json, Failure, Provenance,
    RunReport,
};
use crate::{CliError, Outcome};

/// A manifest loaded for processing, with what is needed to report on it.
pub(crate) struct LoadedManifest {
    pub corpus: CorpusManifest,
    pub dir: PathBuf,
    pub sha256: String,
    lines: HashMap<String, usize>,
}

impl LoadedManifest {
    pub fn load(cfg: &PipelineConfig) -> Result<Self, CliError> {
        let path = cfg.manifest_path()?;
        let bytes = read_file(path)?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| CliError::Usage(format!("manifest {} is not UTF-8", path.display())))?;
        let corpus = CorpusManifest::parse_jsonl(&text)
            .map_err(|source| CliError::Manifest { path: path.to_path_buf(), source })?;
        Ok(Self {
            corpus,
            dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            sha256: sha256_hex(&bytes),
            lines: line_numbers(&text),
        })
    }

    pub fn failure(&self, utt: &Utterance, error: impl ToString) -> Failure {
        Failure {
            id: utt.id.clone(),
            line: self.lines.get(&utt.id).copied(),
            audio: utt.audio_path.clone(),
            error: error.to_string(),
        }
    }
}

/// Output of one utterance: its manifest entry and the files written.
struct Done {
    utterance: Utterance,
    outputs: Vec<(String, String)>,
    skipped_vad: bool,
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))
}

fn read_audio(path: &Path) -> Result<(AudioBuffer<f64>, String), String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let buf = decode_wav(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((buf.convert(), sha256_hex(&bytes)))
}

#[derive(Serialize)]
struct AudioSidecar<'a> {
    provenance: Provenance,
    source_sample_rate: u32,
    source_duration_s: f64,
    sample_rate: u32,
    duration_s: f64,
    no_speech: bool,
    vad_skipped: bool,
    vad: &'a VadConfig,
    /// Level whose segments were kept, below `vad.aggressiveness` when the
    /// requested level found nothing.
    vad_level: Option<u8>,
    /// Kept regions on the source timeline.
    segments: Vec<VoicedSegment>,
}

/// Writes the updated manifest and the run report, and turns the per-item
/// results into an outcome.
fn finish(
    loaded: &LoadedManifest,
    results: Vec<Result<Done, Failure>>,
    mut report: RunReport,
    out: &Path,
) -> Result<Outcome, CliError> {
    let mut kept = Vec::new();
    for r in results {
        match r {
            Ok(done) => {
                report.processed += 1;
                report.skipped += usize::from(done.skipped_vad);
                report.outputs.extend(done.outputs);
                kept.push(done.utterance);
            }
            Err(f) => {
                warn!("{} (line {:?}): {}", f.id, f.line, f.error);
                report.failures.push(f);
            }
        }
    }
    let manifest = CorpusManifest::from_utterances(kept, CANONICAL_SAMPLE_RATE)
        .and_then(|m| m.with_speakers(loaded.corpus.speakers().to_vec()))
        .map_err(|source| CliError::Manifest { path: out.join("manifest.jsonl"), source })?;
    let sha = write_bytes(&out.join("manifest.jsonl"), manifest.to_jsonl().as_bytes())?;
    report.outputs.insert("manifest.jsonl".into(), sha);
    report.write(out)?;
    info!("{}: {} processed, {} failed", report.command, report.processed, report.failures.len());
    Ok(Outcome { failures: report.failures.len() })
}

/// Silence removal and resampling to the canonical rate.
pub fn prep(cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let loaded = LoadedManifest::load(cfg)?;
    let out = cfg.out_dir()?;
    if loaded.corpus.is_empty() {
        info!("prep: manifest is empty, nothing to do");
        return Ok(Outcome::default());
    }
    let config_sha = cfg.params_sha256();
    let vad = &cfg.params.vad;
    let pool = worker_pool(cfg.workers)?;

    let results: Vec<Result<Done, Failure>> = pool.install(|| {
        loaded
            .corpus
            .utterances()
            .par_iter()
            .map(|utt| prep_one(utt, &loaded, out, vad, &config_sha).map_err(|e| loaded.failure(utt, e)))
            .collect()
    });
    finish(&loaded, results, RunReport::new("prep", config_sha.clone(), Some(loaded.sha256.clone())), out)
}

fn prep_one(utt: &Utterance, loaded: &LoadedManifest, out: &Path, vad: &VadConfig, config_sha: &str) -> Result<Done, String> {
    let (source, input_sha) = read_audio(&resolve_audio(&loaded.dir, &utt.audio_path))?;
    // items already flagged by an earlier run keep their audio as is
    let skipped_vad = utt.has_flag(UtteranceFlag::NoSpeechDetected);
    let (trimmed, segments, no_speech, vad_level) = if skipped_vad {
        (source.clone(), Vec::new(), true, None)
    } else {
        let r = remove_silence(&source, vad).map_err(|e| e.to_string())?;
        (r.audio, r.segments, r.no_speech, r.aggressiveness)
    };
    let audio = resample(&trimmed, CANONICAL_SAMPLE_RATE).map_err(|e| e.to_string())?;

    let stem = output_stem(&utt.id);
    let wav_rel = format!("wav/{stem}.wav");
    let json_rel = format!("wav/{stem}.json");
    let wav_sha = write_bytes(&out.join(&wav_rel), &encode_wav(&audio).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let sidecar = AudioSidecar {
        provenance: Provenance::new(config_sha, &utt.audio_path, input_sha),
        source_sample_rate: source.sample_rate(),
        source_duration_s: source.duration_s(),
        sample_rate: audio.sample_rate(),
        duration_s: audio.duration_s(),
        no_speech,
        vad_skipped: skipped_vad,
        vad,
        vad_level,
        segments,
    };
    let json_sha = write_json(&out.join(&json_rel), &sidecar).map_err(|e| e.to_string())?;

    let mut utterance = utt.clone();
    utterance.audio_path = wav_rel.clone();
    utterance.duration_s = Some(audio.duration_s());
    utterance.n_mel_frames = None;
    if no_speech && !utterance.has_flag(UtteranceFlag::NoSpeechDetected) {
        utterance.flags.push(UtteranceFlag::NoSpeechDetected);
    }
    Ok(Done { utterance, outputs: vec![(wav_rel, wav_sha), (json_rel, json_sha)], skipped_vad })
}

#[derive(Serialize)]
struct MelFileSidecar {
    provenance: Provenance,
    #[serde(flatten)]
    mel: MelSidecar,
}

/// Log-mel spectrograms for every utterance.
pub fn mel(cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let loaded = LoadedManifest::load(cfg)?;
    let out = cfg.out_dir()?;
    if loaded.corpus.is_empty() {
        info!("mel: manifest is empty, nothing to do");
        return Ok(Outcome::default());
    }
    let config_sha = cfg.params_sha256();
    let p = &cfg.params;
    let extractor = MelExtractor::<f64>::new(p.spectrogram.clone(), p.mel.clone(), p.sample_rate)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let pool = worker_pool(cfg.workers)?;

    let results: Vec<Result<Done, Failure>> = pool.install(|| {
        loaded
            .corpus
            .utterances()
            .par_iter()
            .map(|utt| mel_one(utt, &loaded, out, &extractor, &config_sha).map_err(|e| loaded.failure(utt, e)))
            .collect()
    });
    finish(&loaded, results, RunReport::new("mel", config_sha.clone(), Some(loaded.sha256.clone())), out)
}

fn mel_one(
    utt: &Utterance,
    loaded: &LoadedManifest,
    out: &Path,
    extractor: &MelExtractor<f64>,
    config_sha: &str,
) -> Result<Done, String> {
    let (mut audio, input_sha) = read_audio(&resolve_audio(&loaded.dir, &utt.audio_path))?;
    let rate = extractor.filterbank().sample_rate();
    if audio.sample_rate() != rate {
        audio = resample(&audio, rate).map_err(|e| e.to_string())?;
    }
    let mel = extractor.compute(&audio).map_err(|e| e.to_string())?;

    let stem = output_stem(&utt.id);
    let mel_rel = format!("mel/{stem}.mel");
    let json_rel = format!("mel/{stem}.json");
    let mel_sha = write_bytes(&out.join(&mel_rel), &encode_mel1(&mel).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let sidecar = MelFileSidecar {
        provenance: Provenance::new(config_sha, &utt.audio_path, input_sha.clone()),
        mel: MelSidecar::new(&mel, extractor.spectrogram_config(), extractor.mel_config(), input_sha),
    };
    let json_sha = write_json(&out.join(&json_rel), &sidecar).map_err(|e| e.to_string())?;

    let mut utterance = utt.clone();
    utterance.audio_path = rebase(&utt.audio_path, &loaded.dir, out);
    utterance.n_mel_frames = Some(mel.n_frames() as u64);
    Ok(Done { utterance, outputs: vec![(mel_rel, mel_sha), (json_rel, json_sha)], skipped_vad: false })
}
