//! Manifest-level commands: graphemes, statistics, curriculum, sampling and
//! training readiness.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;
use ttsprep::curriculum::{default_plan, materialize, PlanDocument};
use ttsprep::dataset::{compute_stats, export_conditioning_spec, full_grid, validate_for_training, TrainingReport};
use ttsprep::sampler::{build_sampler, select_clip, ClipSelection, RNG_ALGORITHM};
use ttsprep::text_frontend::{text_to_graphemes, SymbolTable};

use crate::config::PipelineConfig;
use crate::output::{resolve_audio, write_bytes, write_json, Provenance, RunReport};
use crate::pipeline::LoadedManifest;
use crate::{CliError, Outcome};

/// Grapheme IDs for one string (printed) or for every manifest transcript.
pub fn text(cfg: &PipelineConfig, input: Option<&str>) -> Result<Outcome, CliError> {
    let table = SymbolTable::default();
    if let Some(s) = input {
        let seq = text_to_graphemes(s, &table)?;
        let symbols: Vec<&str> = seq.ids.iter().filter_map(|&id| table.symbol(id)).collect();
        println!("{}", json!({ "text": s, "ids": seq.ids, "symbols": symbols }));
        return Ok(Outcome::default());
    }

    let loaded = LoadedManifest::load(cfg)?;
    let out = cfg.out_dir()?;
    let mut report = RunReport::new("text", cfg.params_sha256(), Some(loaded.sha256.clone()));
    let mut lines = String::new();
    for utt in loaded.corpus.utterances() {
        match text_to_graphemes(&utt.text, &table) {
            Ok(seq) => {
                report.processed += 1;
                let _ = writeln!(lines, "{}", json!({ "id": utt.id, "ids": seq.ids }));
            }
            Err(e) => report.failures.push(loaded.failure(utt, e)),
        }
    }
    report.outputs.insert("graphemes.jsonl".into(), write_bytes(&out.join("graphemes.jsonl"), lines.as_bytes())?);
    report.outputs.insert("symbols.json".into(), write_json(&out.join("symbols.json"), &table)?);
    report.write(out)?;
    println!("text: {} transcripts converted, {} rejected, {} symbols", report.processed, report.failures.len(), table.len());
    for f in &report.failures {
        println!("  line {}: {}: {}", f.line.unwrap_or(0), f.id, f.error);
    }
    Ok(Outcome { failures: report.failures.len() })
}

/// Hours per speaker and emotion.
pub fn stats(cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let loaded = LoadedManifest::load(cfg)?;
    let stats = compute_stats(&loaded.corpus);
    let table = stats.render_table();
    print!("{table}");
    println!("{} utterances, {} without a duration", stats.utterances, stats.missing_duration);
    if let Some(out) = cfg.out.as_deref() {
        let mut report = RunReport::new("stats", cfg.params_sha256(), Some(loaded.sha256.clone()));
        report.processed = stats.utterances;
        report.outputs.insert("stats.json".into(), write_json(&out.join("stats.json"), &stats.to_json())?);
        report.outputs.insert("stats.txt".into(), write_bytes(&out.join("stats.txt"), table.as_bytes())?);
        report.write(out)?;
    }
    Ok(Outcome::default())
}

#[derive(Serialize)]
struct PlanFile<'a> {
    #[serde(flatten)]
    document: PlanDocument<'a>,
    provenance: Provenance,
}

/// The curriculum plan, and per-stage manifests when a manifest is given.
pub fn plan(cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let out = cfg.out_dir()?;
    let mut plan = default_plan();
    plan.vocoder.clip = cfg.params.clip;
    plan.validate()?;
    let loaded = cfg.manifest.as_ref().map(|_| LoadedManifest::load(cfg)).transpose()?;
    let config_sha = cfg.params_sha256();
    let manifest_sha = loaded.as_ref().map(|l| l.sha256.clone());

    let mut report = RunReport::new("plan", config_sha.clone(), manifest_sha.clone());
    let plan_file = PlanFile {
        document: plan.document(),
        provenance: Provenance::new(&config_sha, "", manifest_sha.unwrap_or_default()),
    };
    report.outputs.insert("plan.json".into(), write_json(&out.join("plan.json"), &plan_file)?);

    let stages = loaded.as_ref().map(|l| materialize(&plan, &l.corpus)).transpose()?;
    let mut start = 0;
    for (n, (stage, end)) in plan.stages.iter().zip(plan.boundaries()).enumerate() {
        let mut line = format!("stage {n} {:<24} iterations [{start}, {end})", stage.name);
        if let Some(stages) = &stages {
            let name = format!("stage{n}.jsonl");
            report.outputs.insert(name.clone(), write_bytes(&out.join(&name), stages[n].to_jsonl().as_bytes())?);
            let _ = write!(line, "  {} utterances, {} pairs", stages[n].len(), stages[n].pairs().len());
            report.processed += stages[n].len();
        }
        println!("{line}");
        start = end;
    }
    report.write(out)?;
    Ok(Outcome::default())
}

#[derive(Serialize)]
struct BatchElement<'a> {
    id: &'a str,
    /// `None` when the utterance has no mel frame count yet.
    clip: Option<ClipSelection>,
}

/// Balanced batches as JSONL, one line per batch.
pub fn sample(cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let loaded = LoadedManifest::load(cfg)?;
    let out = cfg.out_dir()?;
    let p = &cfg.params;
    let mut sampler = build_sampler(&loaded.corpus, p.seed)?;
    let frames: std::collections::HashMap<&str, &ttsprep::dataset::Utterance> =
        loaded.corpus.utterances().iter().map(|u| (u.id.as_str(), u)).collect();

    let mut lines = String::new();
    let mut excluded = 0usize;
    for b in 0..p.batches {
        let ids = sampler.next_batch(p.batch_size)?;
        let mut elements = Vec::with_capacity(ids.len());
        for id in &ids {
            let utt = frames[id.as_str()];
            let clip = match utt.n_mel_frames {
                Some(_) => Some(select_clip(utt, &p.clip, &mut sampler)?),
                None => None,
            };
            excluded += usize::from(clip == Some(ClipSelection::Excluded));
            elements.push(BatchElement { id, clip });
        }
        let _ = writeln!(lines, "{}", json!({ "batch": b, "elements": elements }));
    }

    let mut report = RunReport::new("sample", cfg.params_sha256(), Some(loaded.sha256.clone()));
    report.processed = p.batches * p.batch_size;
    report.extra = Some(json!({
        "rng": RNG_ALGORITHM,
        "seed": p.seed,
        "pairs": sampler.pair_count(),
        "batch_size": p.batch_size,
        "batches": p.batches,
        "clip_frames": p.clip.clip_frames,
    }));
    report.outputs.insert("batches.jsonl".into(), write_bytes(&out.join("batches.jsonl"), lines.as_bytes())?);
    report.write(out)?;
    println!(
        "sample: {} batches of {} over {} pairs (seed {}), {} draws excluded from vocoder clips",
        p.batches,
        p.batch_size,
        sampler.pair_count(),
        p.seed,
        excluded
    );
    Ok(Outcome::default())
}

#[derive(Serialize)]
struct ValidationFile {
    #[serde(flatten)]
    training: TrainingReport,
    missing_audio: Vec<String>,
    clip_frames: u64,
}

/// Training readiness report plus the conditioning layout. Missing audio
/// files count as failures; the rest is informational.
pub fn validate(cfg: &PipelineConfig) -> Result<Outcome, CliError> {
    let loaded = LoadedManifest::load(cfg)?;
    let corpus = &loaded.corpus;
    let clip_frames = cfg.params.clip.clip_frames;
    let training = validate_for_training(corpus, &full_grid(corpus.speakers()), clip_frames);
    let missing_audio: Vec<String> = corpus
        .utterances()
        .iter()
        .filter(|u| !resolve_audio(&loaded.dir, &u.audio_path).is_file())
        .map(|u| u.id.clone())
        .collect();
    let file = ValidationFile { training, missing_audio, clip_frames };

    println!("validate: {} utterances, {} speakers", corpus.len(), corpus.speakers().len());
    println!("  missing (speaker, emotion) pairs: {}", file.training.missing_pairs.len());
    for pair in &file.training.missing_pairs {
        println!("    {} {}", pair.speaker, pair.emotion.abbrev());
    }
    println!("  no speech detected: {}", file.training.no_speech.len());
    println!("  shorter than {} mel frames: {}", clip_frames, file.training.too_short_for_vocoder.len());
    println!("  mel frame count unknown: {}", file.training.unknown_mel_frames.len());
    println!("  missing audio files: {}", file.missing_audio.len());

    if let Some(out) = cfg.out.as_deref() {
        let mut report = RunReport::new("validate", cfg.params_sha256(), Some(loaded.sha256.clone()));
        report.processed = corpus.len();
        report.failures = corpus
            .utterances()
            .iter()
            .filter(|u| file.missing_audio.contains(&u.id))
            .map(|u| loaded.failure(u, "audio file not found"))
            .collect();
        report.outputs.insert("validation.json".into(), write_json(&out.join("validation.json"), &file)?);
        if !corpus.speakers().is_empty() {
            let spec = export_conditioning_spec(corpus)?;
            report.outputs.insert("conditioning.json".into(), write_json(&out.join("conditioning.json"), &spec)?);
        }
        report.write(out)?;
    }
    Ok(Outcome { failures: file.missing_audio.len() })
}
