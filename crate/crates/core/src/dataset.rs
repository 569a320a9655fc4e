//! Corpus manifests, duration statistics and conditioning layout.
//!
//! A manifest is JSONL, one utterance per line:
//!
//! ```text
//! {"id":"u1","audio":"wav/u1.wav","text":"안녕하세요.","speaker":"kss-f","emotion":"neutral","duration_s":1.5,"n_mel_frames":130,"flags":[]}
//! ```
//!
//! `duration_s` and `n_mel_frames` are optional until the `prep` and `mel`
//! stages fill them in.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::CANONICAL_SAMPLE_RATE;

pub const SPEAKER_DIM: usize = 5;
pub const EMOTION_DIM: usize = 3;

/// Speaker labels of the reference corpus, in table order.
pub const CANONICAL_SPEAKERS: [&str; 11] = [
    "kss-f",
    "ketts-30f",
    "ketts-30m",
    "ketts2-20m",
    "ketts2-30f",
    "ketts2-40m",
    "ketts2-50f",
    "ketts2-50m",
    "ketts2-60f",
    "ketts3-f",
    "ketts3-m",
];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("line {line}: duplicate utterance id {id:?} (first seen on line {first_line})")]
    DuplicateId { id: String, line: usize, first_line: usize },
    #[error("line {line}: unknown emotion {value:?}")]
    UnknownEmotion { line: usize, value: String },
    #[error("line {line}: missing field {field:?}")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: invalid {field}: {message}")]
    InvalidField { line: usize, field: &'static str, message: String },
    #[error("utterance {id:?} uses undeclared speaker {speaker:?}")]
    UndeclaredSpeaker { id: String, speaker: String },
    #[error("corpus declares no speakers")]
    EmptyCorpus,
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// The seven basic emotion classes; codes are stable, neutral is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Neutral = 0,
    Anger = 1,
    Disgust = 2,
    Fear = 3,
    Happiness = 4,
    Sadness = 5,
    Surprise = 6,
}

impl Emotion {
    pub const ALL: [Emotion; 7] = [
        Emotion::Neutral,
        Emotion::Anger,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Happiness,
        Emotion::Sadness,
        Emotion::Surprise,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(usize::from(code)).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            Emotion::Neutral => "neutral",
            Emotion::Anger => "anger",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Happiness => "happiness",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
        }
    }

    /// Three-letter column heading.
    pub fn abbrev(self) -> &'static str {
        &self.label()[..3]
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Emotion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|e| e.label() == s).ok_or_else(|| s.to_string())
    }
}

/// A (speaker, emotion) cell; ordered by speaker then emotion code.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairKey {
    pub speaker: String,
    pub emotion: Emotion,
}

impl PairKey {
    pub fn new(speaker: impl Into<String>, emotion: Emotion) -> Self {
        Self { speaker: speaker.into(), emotion }
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.speaker, self.emotion)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtteranceFlag {
    NoSpeechDetected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Utterance {
    pub id: String,
    #[serde(rename = "audio")]
    pub audio_path: String,
    pub text: String,
    pub speaker: String,
    pub emotion: Emotion,
    /// Seconds after silence removal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_mel_frames: Option<u64>,
    #[serde(default)]
    pub flags: Vec<UtteranceFlag>,
}

impl Utterance {
    pub fn pair(&self) -> PairKey {
        PairKey::new(self.speaker.clone(), self.emotion)
    }

    pub fn has_flag(&self, flag: UtteranceFlag) -> bool {
        self.flags.contains(&flag)
    }
}

/// Mel frame count for `samples` audio samples under centered framing.
pub fn mel_frames_for(samples: u64, hop: u64) -> u64 {
    1 + samples / hop
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    utterances: Vec<Utterance>,
    speakers: Vec<String>,
    sample_rate: u32,
}

impl Default for CorpusManifest {
    fn default() -> Self {
        Self { utterances: Vec::new(), speakers: Vec::new(), sample_rate: CANONICAL_SAMPLE_RATE }
    }
}

const REQUIRED_FIELDS: [&str; 5] = ["id", "audio", "text", "speaker", "emotion"];

fn parse_line(line_no: usize, line: &str) -> Result<Utterance, DatasetError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| DatasetError::ParseError { line: line_no, message: e.to_string() })?;
    let obj = value
        .as_object()
        .ok_or_else(|| DatasetError::ParseError { line: line_no, message: "expected a JSON object".into() })?;
    for field in REQUIRED_FIELDS {
        if !obj.contains_key(field) {
            return Err(DatasetError::MissingField { line: line_no, field });
        }
    }
    if let Some(raw) = obj["emotion"].as_str() {
        if raw.parse::<Emotion>().is_err() {
            return Err(DatasetError::UnknownEmotion { line: line_no, value: raw.to_string() });
        }
    }
    let utt: Utterance =
        serde_json::from_value(value).map_err(|e| DatasetError::ParseError { line: line_no, message: e.to_string() })?;
    if utt.id.is_empty() {
        return Err(DatasetError::InvalidField { line: line_no, field: "id", message: "empty".into() });
    }
    if let Some(d) = utt.duration_s {
        if !(d > 0.0 && d.is_finite()) {
            return Err(DatasetError::InvalidField {
                line: line_no,
                field: "duration_s",
                message: format!("{d} is not a positive duration"),
            });
        }
    }
    Ok(utt)
}

impl CorpusManifest {
    /// Builds a manifest, declaring speakers in order of first appearance.
    pub fn from_utterances(utterances: Vec<Utterance>, sample_rate: u32) -> Result<Self, DatasetError> {
        let mut seen = HashMap::new();
        let mut speakers: Vec<String> = Vec::new();
        for (i, u) in utterances.iter().enumerate() {
            if let Some(first) = seen.insert(u.id.clone(), i + 1) {
                return Err(DatasetError::DuplicateId { id: u.id.clone(), line: i + 1, first_line: first });
            }
            if !speakers.contains(&u.speaker) {
                speakers.push(u.speaker.clone());
            }
        }
        Ok(Self { utterances, speakers, sample_rate })
    }

    /// Replaces the declared speaker list; every utterance speaker must be in it.
    pub fn with_speakers(mut self, declared: Vec<String>) -> Result<Self, DatasetError> {
        for u in &self.utterances {
            if !declared.contains(&u.speaker) {
                return Err(DatasetError::UndeclaredSpeaker { id: u.id.clone(), speaker: u.speaker.clone() });
            }
        }
        self.speakers = declared;
        Ok(self)
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, DatasetError> {
        let mut utterances = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let utt = parse_line(line_no, line)?;
            if let Some(&first_line) = seen.get(&utt.id) {
                return Err(DatasetError::DuplicateId { id: utt.id, line: line_no, first_line });
            }
            seen.insert(utt.id.clone(), line_no);
            utterances.push(utt);
        }
        Self::from_utterances(utterances, CANONICAL_SAMPLE_RATE)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for u in &self.utterances {
            out.push_str(&serde_json::to_string(u).expect("utterances serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let path = path.as_ref();
        fs::write(path, self.to_jsonl()).map_err(|source| DatasetError::Io { path: path.display().to_string(), source })
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn speakers(&self) -> &[String] {
        &self.speakers
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Utterance> {
        self.utterances.iter().find(|u| u.id == id)
    }

    /// Distinct pairs that have at least one utterance, sorted.
    pub fn pairs(&self) -> BTreeSet<PairKey> {
        self.utterances.iter().map(Utterance::pair).collect()
    }

    /// Sub-manifest keeping the speaker declarations and sample rate.
    pub fn filter(&self, mut keep: impl FnMut(&Utterance) -> bool) -> Self {
        Self {
            utterances: self.utterances.iter().filter(|u| keep(u)).cloned().collect(),
            speakers: self.speakers.clone(),
            sample_rate: self.sample_rate,
        }
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<CorpusManifest, DatasetError> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.display().to_string(), source })?;
    CorpusManifest::parse_jsonl(&text)
}

// ---------------------------------------------------------------------------
// statistics

const MICROS_PER_HUNDREDTH_HOUR: u64 = 36_000_000;

fn to_micros(seconds: f64) -> u64 {
    (seconds * 1e6).round() as u64
}

/// Hundredths of an hour, rounded half-up.
fn hundredths(micros: u64) -> u64 {
    (micros + MICROS_PER_HUNDREDTH_HOUR / 2) / MICROS_PER_HUNDREDTH_HOUR
}

fn render_hours(micros: u64) -> String {
    let h = hundredths(micros);
    format!("{}.{:02}", h / 100, h % 100)
}

/// Hours of audio; exact sums kept in integer microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Duration {
    pub micros: u64,
}

impl Duration {
    pub fn hours_rounded(self) -> f64 {
        hundredths(self.micros) as f64 / 100.0
    }

    pub fn seconds(self) -> f64 {
        self.micros as f64 / 1e6
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_hours(self.micros))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub speaker: String,
    /// `None` when the row has no utterances.
    pub total: Option<Duration>,
    /// Indexed by emotion code; `None` renders blank.
    pub cells: [Option<Duration>; 7],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub rows: Vec<StatsRow>,
    pub column_totals: [Option<Duration>; 7],
    pub grand_total: Duration,
    pub utterances: usize,
    /// Utterances without a duration, counted as zero.
    pub missing_duration: usize,
}

pub fn compute_stats(corpus: &CorpusManifest) -> CorpusStats {
    let mut cells: HashMap<&str, [Option<u64>; 7]> = HashMap::new();
    let mut missing = 0;
    for u in corpus.utterances() {
        let micros = match u.duration_s {
            Some(d) => to_micros(d),
            None => {
                missing += 1;
                0
            }
        };
        let row = cells.entry(u.speaker.as_str()).or_insert([None; 7]);
        let cell = &mut row[usize::from(u.emotion.code())];
        *cell = Some(cell.unwrap_or(0) + micros);
    }

    let mut column_totals = [None; 7];
    let mut grand = 0u64;
    let rows = corpus
        .speakers()
        .iter()
        .map(|speaker| {
            let raw = cells.get(speaker.as_str()).copied().unwrap_or([None; 7]);
            let mut total = None;
            for (e, cell) in raw.iter().enumerate() {
                if let Some(us) = cell {
                    total = Some(total.unwrap_or(0) + us);
                    column_totals[e] = Some(column_totals[e].unwrap_or(0) + us);
                    grand += us;
                }
            }
            StatsRow {
                speaker: speaker.clone(),
                total: total.map(|micros| Duration { micros }),
                cells: raw.map(|c| c.map(|micros| Duration { micros })),
            }
        })
        .collect();

    CorpusStats {
        rows,
        column_totals: column_totals.map(|c| c.map(|micros| Duration { micros })),
        grand_total: Duration { micros: grand },
        utterances: corpus.len(),
        missing_duration: missing,
    }
}

impl CorpusStats {
    /// Aligned text table: one row per speaker plus an `all` row.
    pub fn render_table(&self) -> String {
        let cell = |d: &Option<Duration>| d.map(|d| d.to_string()).unwrap_or_default();
        let mut lines: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["Speaker".to_string(), "all".to_string()];
        header.extend(Emotion::ALL.iter().map(|e| e.abbrev().to_string()));
        lines.push(header);
        for row in &self.rows {
            let mut l = vec![row.speaker.clone(), cell(&row.total)];
            l.extend(row.cells.iter().map(cell));
            lines.push(l);
        }
        let mut all = vec!["all".to_string(), self.grand_total.to_string()];
        all.extend(self.column_totals.iter().map(cell));
        lines.push(all);

        let widths: Vec<usize> =
            (0..9).map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for l in &lines {
            let mut s = format!("{:<w$}", l[0], w = widths[0]);
            for (c, v) in l.iter().enumerate().skip(1) {
                let _ = write!(s, "  {:>w$}", v, w = widths[c]);
            }
            out.push_str(s.trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let cells_json = |cells: &[Option<Duration>; 7]| {
            let mut m = serde_json::Map::new();
            for e in Emotion::ALL {
                if let Some(d) = cells[usize::from(e.code())] {
                    m.insert(e.label().to_string(), serde_json::json!({"hours": d.hours_rounded(), "seconds": d.seconds()}));
                }
            }
            Value::Object(m)
        };
        serde_json::json!({
            "rows": self.rows.iter().map(|r| serde_json::json!({
                "speaker": r.speaker,
                "all_hours": r.total.map(Duration::hours_rounded),
                "all_seconds": r.total.map(Duration::seconds),
                "cells": cells_json(&r.cells),
            })).collect::<Vec<_>>(),
            "all": cells_json(&self.column_totals),
            "total_hours": self.grand_total.hours_rounded(),
            "total_seconds": self.grand_total.seconds(),
            "utterances": self.utterances,
            "missing_duration": self.missing_duration,
        })
    }
}

// ---------------------------------------------------------------------------
// training readiness

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Required pairs without a single utterance.
    pub missing_pairs: Vec<PairKey>,
    pub no_speech: Vec<String>,
    /// Utterances with fewer mel frames than the vocoder clip length.
    pub too_short_for_vocoder: Vec<String>,
    /// Utterances whose mel frame count is not known yet.
    pub unknown_mel_frames: Vec<String>,
}

impl TrainingReport {
    pub fn is_clean(&self) -> bool {
        self.missing_pairs.is_empty() && self.no_speech.is_empty() && self.too_short_for_vocoder.is_empty()
    }
}

pub fn validate_for_training(
    corpus: &CorpusManifest,
    required_pairs: &BTreeSet<PairKey>,
    vocoder_clip_frames: u64,
) -> TrainingReport {
    let present = corpus.pairs();
    let mut report = TrainingReport {
        missing_pairs: required_pairs.difference(&present).cloned().collect(),
        ..Default::default()
    };
    for u in corpus.utterances() {
        if u.has_flag(UtteranceFlag::NoSpeechDetected) {
            report.no_speech.push(u.id.clone());
        }
        match u.n_mel_frames {
            Some(n) if n < vocoder_clip_frames => report.too_short_for_vocoder.push(u.id.clone()),
            Some(_) => {}
            None => report.unknown_mel_frames.push(u.id.clone()),
        }
    }
    report
}

/// Every declared speaker crossed with every emotion.
pub fn full_grid(speakers: &[String]) -> BTreeSet<PairKey> {
    speakers.iter().flat_map(|s| Emotion::ALL.map(|e| PairKey::new(s.clone(), e))).collect()
}

// ---------------------------------------------------------------------------
// conditioning vectors

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerSlot {
    pub index: usize,
    pub label: String,
    pub trainable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionSlot {
    pub code: u8,
    pub label: String,
    pub trainable: bool,
    /// Fixed vector for non-trainable slots.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<Vec<f64>>,
}

/// Layout of the speaker and emotion embeddings fed to the acoustic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningSpec {
    pub speaker_dim: usize,
    pub emotion_dim: usize,
    pub speakers: Vec<SpeakerSlot>,
    pub emotions: Vec<EmotionSlot>,
}

impl ConditioningSpec {
    pub fn neutral(&self) -> &EmotionSlot {
        &self.emotions[usize::from(Emotion::Neutral.code())]
    }
}

/// Speakers in declared order; neutral is pinned to a frozen zero vector.
pub fn export_conditioning_spec(corpus: &CorpusManifest) -> Result<ConditioningSpec, DatasetError> {
    if corpus.speakers().is_empty() {
        return Err(DatasetError::EmptyCorpus);
    }
    Ok(ConditioningSpec {
        speaker_dim: SPEAKER_DIM,
        emotion_dim: EMOTION_DIM,
        speakers: corpus
            .speakers()
            .iter()
            .enumerate()
            .map(|(index, label)| SpeakerSlot { index, label: label.clone(), trainable: true })
            .collect(),
        emotions: Emotion::ALL
            .iter()
            .map(|&e| {
                let neutral = e == Emotion::Neutral;
                EmotionSlot {
                    code: e.code(),
                    label: e.label().to_string(),
                    trainable: !neutral,
                    value: neutral.then(|| vec![0.0; EMOTION_DIM]),
                }
            })
            .collect(),
    })
}
