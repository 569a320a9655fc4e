//! Corpus preparation toolkit for multi-speaker emotional speech synthesis.
//!
//! The crate turns labeled recordings (audio, transcript, speaker, emotion)
//! into training material for an acoustic model and a vocoder:
//!
//! - [`audio_io`]: PCM WAV I/O and band-limited resampling.
//! - [`vad`]: frame-level voice activity detection and silence removal.
//! - [`features`]: log-mel spectrograms on the Slaney mel scale.
//! - [`text_frontend`]: Hangul syllable decomposition into grapheme IDs.
//! - [`dataset`]: JSONL corpus manifests, per-cell duration statistics and the
//!   conditioning-vector layout exported to trainers.
//! - [`sampler`]: balanced speaker-emotion oversampling and vocoder clip
//!   selection.
//! - [`curriculum`]: the staged training plan.
//!
//! DSP code is generic over the [`Scalar`] trait (`f32` or `f64`). The aliases
//! below pin the precisions the pipeline actually uses: 32-bit samples at
//! module boundaries, 64-bit inside the filterbank and STFT.

pub mod audio_io;
pub mod curriculum;
pub mod dataset;
pub mod features;
pub mod sampler;
mod scalar;
pub mod text_frontend;
pub mod vad;

pub use scalar::Scalar;

/// Sample rate every processed utterance is stored at.
pub const CANONICAL_SAMPLE_RATE: u32 = 22_050;

/// Audio as decoded from disk.
pub type AudioBufferF32 = audio_io::AudioBuffer<f32>;
/// Audio promoted to double precision for DSP.
pub type AudioBufferF64 = audio_io::AudioBuffer<f64>;
pub type MelFilterbankF64 = features::MelFilterbank<f64>;
pub type MelSpectrogramF32 = features::MelSpectrogram<f32>;
pub type MelSpectrogramF64 = features::MelSpectrogram<f64>;
pub type StftMagnitudeF64 = features::StftMagnitude<f64>;
