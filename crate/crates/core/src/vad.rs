//! Voice activity detection and silence removal.
//!
//! Frames are classified at 16 kHz by a sub-band log-energy detector, then
//! grouped by a ring-buffer collector: a segment opens once more than
//! `trigger_ratio` of the last `padding_ms / frame_ms` frames are voiced and
//! closes once more than `trigger_ratio` of them are unvoiced. Buffered frames
//! are kept on both sides, so every segment carries up to `padding_ms` of
//! context around the speech.

use std::collections::VecDeque;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio_io::{resample, AudioBuffer, AudioError};
use crate::Scalar;

/// Rate the detector runs at.
pub const VAD_SAMPLE_RATE: u32 = 16_000;

/// Band edges in Hz of the six analysis bands.
const BANDS_HZ: [(f64, f64); 6] = [
    (80.0, 250.0),
    (250.0, 500.0),
    (500.0, 1000.0),
    (1000.0, 2000.0),
    (2000.0, 3000.0),
    (3000.0, 4000.0),
];
const BAND_WEIGHTS: [f64; 6] = [0.8, 1.0, 1.0, 1.0, 0.8, 0.6];

/// Minimum frame level (dBFS, mean square) per aggressiveness.
const ENERGY_GATE_DB: [f64; 4] = [-55.0, -50.0, -45.0, -40.0];
/// Minimum weighted band SNR (dB) per aggressiveness.
const SNR_GATE_DB: [f64; 4] = [4.0, 6.0, 9.0, 12.0];

const NOISE_INIT_DB: f64 = -60.0;
const NOISE_MIN_DB: f64 = -100.0;
/// Per-frame upward drift of the noise floor; downward moves are immediate.
const NOISE_RISE_DB: f64 = 0.05;
const SNR_CAP_DB: f64 = 60.0;
const POWER_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum VadError {
    #[error("invalid VAD configuration: {0}")]
    InvalidConfig(String),
    #[error("detector runs at {VAD_SAMPLE_RATE} Hz, got {0} Hz")]
    BadSampleRate(u32),
    #[error("audio shorter than one {frame_ms} ms frame")]
    TooShort { frame_ms: u32 },
    #[error(transparent)]
    Audio(#[from] AudioError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VadConfig {
    /// 0 (permissive) to 3 (strict).
    pub aggressiveness: u8,
    /// 10, 20 or 30.
    pub frame_ms: u32,
    pub padding_ms: u32,
    pub trigger_ratio: f64,
}

impl Default for VadConfig {
    fn default() -> Self {
        Self { aggressiveness: 3, frame_ms: 30, padding_ms: 150, trigger_ratio: 0.9 }
    }
}

impl VadConfig {
    pub fn validate(&self) -> Result<(), VadError> {
        let bad = |m: String| Err(VadError::InvalidConfig(m));
        if self.aggressiveness > 3 {
            return bad(format!("aggressiveness {} not in 0..=3", self.aggressiveness));
        }
        if ![10, 20, 30].contains(&self.frame_ms) {
            return bad(format!("frame_ms {} not one of 10, 20, 30", self.frame_ms));
        }
        if self.padding_ms == 0 || self.padding_ms % self.frame_ms != 0 {
            return bad(format!("padding_ms {} must be a positive multiple of {}", self.padding_ms, self.frame_ms));
        }
        if !(self.trigger_ratio > 0.0 && self.trigger_ratio <= 1.0) {
            return bad(format!("trigger_ratio {} not in (0, 1]", self.trigger_ratio));
        }
        Ok(())
    }

    pub fn frame_samples(&self) -> usize {
        (VAD_SAMPLE_RATE / 1000 * self.frame_ms) as usize
    }

    /// Length of the collector's ring buffer in frames.
    pub fn ring_frames(&self) -> usize {
        (self.padding_ms / self.frame_ms) as usize
    }

    fn frame_s(&self) -> f64 {
        f64::from(self.frame_ms) / 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoicedSegment {
    pub start_s: f64,
    pub end_s: f64,
}

/// Half-open frame range produced by the collector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpan {
    pub start: usize,
    pub end: usize,
    /// The segment was still open when the input ran out.
    pub open_at_end: bool,
}

#[derive(Debug, Clone, Copy)]
struct FrameLevels {
    energy_db: f64,
    snr_db: f64,
}

impl FrameLevels {
    fn voiced(&self, aggressiveness: u8) -> bool {
        let a = usize::from(aggressiveness);
        self.energy_db > ENERGY_GATE_DB[a] && self.snr_db > SNR_GATE_DB[a]
    }
}

/// Aggressiveness-independent frame measurements; the decision for each
/// level only compares them against per-level thresholds that rise with the
/// level.
fn measure_frames(samples: &[f64], frame_len: usize) -> Vec<FrameLevels> {
    let fft_len = frame_len.next_power_of_two();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_len);
    let window: Vec<f64> = (0..frame_len)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / frame_len as f64).cos()))
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let bin_hz = f64::from(VAD_SAMPLE_RATE) / fft_len as f64;
    let band_bins: Vec<(usize, usize)> = BANDS_HZ
        .iter()
        .map(|&(lo, hi)| ((lo / bin_hz).ceil() as usize, ((hi / bin_hz).ceil() as usize).min(fft_len / 2)))
        .collect();

    let mut noise_db = [NOISE_INIT_DB; 6];
    let mut buf = vec![Complex::new(0.0, 0.0); fft_len];
    samples
        .chunks_exact(frame_len)
        .map(|frame| {
            let mean_square = frame.iter().map(|s| s * s).sum::<f64>() / frame_len as f64;
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for (slot, (s, w)) in buf.iter_mut().zip(frame.iter().zip(&window)) {
                slot.re = s * w;
            }
            fft.process(&mut buf);

            let mut weighted = 0.0;
            for (b, &(lo, hi)) in band_bins.iter().enumerate() {
                let power: f64 = buf[lo..hi].iter().map(|c| c.norm_sqr()).sum::<f64>() * 2.0
                    / (fft_len as f64 * window_power);
                let level = 10.0 * (power + POWER_EPS).log10();
                weighted += BAND_WEIGHTS[b] * (level - noise_db[b]).clamp(0.0, SNR_CAP_DB);
                noise_db[b] = if level < noise_db[b] {
                    level.max(NOISE_MIN_DB)
                } else {
                    (noise_db[b] + NOISE_RISE_DB).min(level)
                };
            }
            FrameLevels {
                energy_db: 10.0 * (mean_square + POWER_EPS).log10(),
                snr_db: weighted / BAND_WEIGHTS.iter().sum::<f64>(),
            }
        })
        .collect()
}

/// One voiced/unvoiced decision per complete frame of 16 kHz audio.
pub fn classify_frames<T: Scalar>(buf: &AudioBuffer<T>, cfg: &VadConfig) -> Result<Vec<bool>, VadError> {
    cfg.validate()?;
    if buf.sample_rate() != VAD_SAMPLE_RATE {
        return Err(VadError::BadSampleRate(buf.sample_rate()));
    }
    let frame_len = cfg.frame_samples();
    if buf.len() < frame_len {
        return Err(VadError::TooShort { frame_ms: cfg.frame_ms });
    }
    let samples: Vec<f64> = buf.samples().iter().map(|s| s.as_f64()).collect();
    Ok(measure_frames(&samples, frame_len).iter().map(|f| f.voiced(cfg.aggressiveness)).collect())
}

/// Ring-buffer collector over frame decisions, in frame units.
pub fn collect_spans(decisions: &[bool], ring_frames: usize, trigger_ratio: f64) -> Vec<FrameSpan> {
    let threshold = trigger_ratio * ring_frames as f64;
    let mut ring: VecDeque<bool> = VecDeque::with_capacity(ring_frames);
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;

    for (i, &voiced) in decisions.iter().enumerate() {
        if ring.len() == ring_frames {
            ring.pop_front();
        }
        ring.push_back(voiced);
        match open {
            None => {
                if ring.iter().filter(|&&v| v).count() as f64 > threshold {
                    open = Some(i + 1 - ring.len());
                    ring.clear();
                }
            }
            Some(start) => {
                if ring.iter().filter(|&&v| !v).count() as f64 > threshold {
                    spans.push(FrameSpan { start, end: i + 1, open_at_end: false });
                    open = None;
                    ring.clear();
                }
            }
        }
    }
    if let Some(start) = open {
        spans.push(FrameSpan { start, end: decisions.len(), open_at_end: true });
    }
    spans
}

pub fn collect_segments(decisions: &[bool], cfg: &VadConfig) -> Vec<VoicedSegment> {
    let frame_s = cfg.frame_s();
    collect_spans(decisions, cfg.ring_frames(), cfg.trigger_ratio)
        .into_iter()
        .map(|s| VoicedSegment { start_s: s.start as f64 * frame_s, end_s: s.end as f64 * frame_s })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SilenceRemoval<T> {
    pub audio: AudioBuffer<T>,
    /// Kept regions on the source timeline.
    pub segments: Vec<VoicedSegment>,
    /// No speech was found; `audio` is the unmodified input.
    pub no_speech: bool,
    /// Level whose segments were kept; `None` with `no_speech`.
    pub aggressiveness: Option<u8>,
}

/// Cuts unvoiced regions at the start, end and middle of `buf`.
///
/// Detection runs on a 16 kHz copy; the kept regions are cut from the
/// original samples. When the requested level finds no segment, the next
/// less aggressive level is tried, so a stricter setting never keeps more
/// audio than a laxer one. An utterance in which no level up to the
/// requested one finds speech comes back unchanged with `no_speech` set.
pub fn remove_silence<T: Scalar>(buf: &AudioBuffer<T>, cfg: &VadConfig) -> Result<SilenceRemoval<T>, VadError> {
    cfg.validate()?;
    let rate = buf.sample_rate();
    let min_len = cfg.frame_samples() as u64 * u64::from(rate) / u64::from(VAD_SAMPLE_RATE);
    if (buf.len() as u64) < min_len.max(1) {
        return Err(VadError::TooShort { frame_ms: cfg.frame_ms });
    }
    let probe = resample(&buf.convert::<f64>(), VAD_SAMPLE_RATE)?;
    if probe.len() < cfg.frame_samples() {
        return Err(VadError::TooShort { frame_ms: cfg.frame_ms });
    }
    let mut found = None;
    for level in (0..=cfg.aggressiveness).rev() {
        let decisions = classify_frames(&probe, &VadConfig { aggressiveness: level, ..cfg.clone() })?;
        let spans = collect_spans(&decisions, cfg.ring_frames(), cfg.trigger_ratio);
        if !spans.is_empty() {
            found = Some((level, spans));
            break;
        }
    }
    let Some((level, spans)) = found else {
        return Ok(SilenceRemoval { audio: buf.clone(), segments: Vec::new(), no_speech: true, aggressiveness: None });
    };

    let frame_s = cfg.frame_s();
    let to_sample = |s: f64| ((s * f64::from(rate)).round() as usize).min(buf.len());
    let mut kept = Vec::new();
    let mut segments = Vec::with_capacity(spans.len());
    for span in spans {
        let start = to_sample(span.start as f64 * frame_s);
        // the trailing partial frame belongs to a segment still open at the end
        let end = if span.open_at_end { buf.len() } else { to_sample(span.end as f64 * frame_s) };
        if start >= end {
            continue;
        }
        kept.extend_from_slice(&buf.samples()[start..end]);
        segments.push(VoicedSegment {
            start_s: start as f64 / f64::from(rate),
            end_s: end as f64 / f64::from(rate),
        });
    }
    Ok(SilenceRemoval { audio: AudioBuffer::new(kept, rate)?, segments, no_speech: false, aggressiveness: Some(level) })
}
