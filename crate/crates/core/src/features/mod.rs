//! Log-mel spectrogram extraction.
//!
//! Pipeline: reflect-padded STFT with a periodic Hann window, magnitude,
//! Slaney-normalized triangular mel filterbank, floor at `clip_floor`, natural
//! log.

mod filterbank;
mod mel1;
mod mel_scale;
mod stft;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio_io::AudioBuffer;
use crate::{Scalar, CANONICAL_SAMPLE_RATE};

pub use filterbank::MelFilterbank;
pub use mel1::{decode_mel1, encode_mel1, read_mel1, write_mel1, MelSidecar, MEL1_MAGIC};
pub use mel_scale::{hz_to_mel_slaney, mel_to_hz_slaney};
pub use stft::{frame_count, periodic_hann, stft_magnitude, StftMagnitude};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("negative frequency {0} Hz")]
    NegativeFrequency(f64),
    #[error("invalid frequency range: {0}")]
    InvalidRange(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("audio contains no samples")]
    EmptyAudio,
    #[error("expected {expected} Hz audio, got {found} Hz")]
    WrongSampleRate { expected: u32, found: u32 },
    #[error("malformed MEL1 data: {0}")]
    MalformedMel1(String),
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    PeriodicHann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterPadding {
    #[default]
    Reflect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrogramConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub win_length: usize,
    pub window: WindowKind,
    pub center_padding: CenterPadding,
}

impl Default for SpectrogramConfig {
    fn default() -> Self {
        Self {
            n_fft: 1024,
            hop: 256,
            win_length: 1024,
            window: WindowKind::PeriodicHann,
            center_padding: CenterPadding::Reflect,
        }
    }
}

impl SpectrogramConfig {
    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: String| Err(FeatureError::InvalidConfig(m));
        if self.n_fft < 2 || self.n_fft % 2 != 0 {
            return bad(format!("n_fft must be even and >= 2, got {}", self.n_fft));
        }
        if self.win_length == 0 || self.win_length > self.n_fft {
            return bad(format!("win_length {} must be in 1..={}", self.win_length, self.n_fft));
        }
        if self.hop == 0 || self.hop > self.win_length {
            return bad(format!("hop {} must be in 1..={}", self.hop, self.win_length));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MelScale {
    #[default]
    Slaney,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MelNorm {
    /// Each triangle scaled by `2 / (f_upper - f_lower)`.
    #[default]
    Slaney,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MelConfig {
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub scale: MelScale,
    pub normalization: MelNorm,
    /// Amplitude floor applied before the log.
    pub clip_floor: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            n_mels: 80,
            fmin: 0.0,
            fmax: 8000.0,
            scale: MelScale::Slaney,
            normalization: MelNorm::Slaney,
            clip_floor: 1e-5,
        }
    }
}

impl MelConfig {
    pub fn validate(&self, sample_rate: u32) -> Result<(), FeatureError> {
        if self.n_mels == 0 {
            return Err(FeatureError::InvalidConfig("n_mels must be >= 1".into()));
        }
        if !(self.clip_floor > 0.0 && self.clip_floor.is_finite()) {
            return Err(FeatureError::InvalidConfig(format!("clip_floor {} must be > 0", self.clip_floor)));
        }
        let nyquist = f64::from(sample_rate) / 2.0;
        if !(self.fmin >= 0.0 && self.fmin < self.fmax && self.fmax <= nyquist * (1.0 + 1e-9)) {
            return Err(FeatureError::InvalidRange(format!(
                "need 0 <= fmin < fmax <= {nyquist}, got [{}, {}]",
                self.fmin, self.fmax
            )));
        }
        Ok(())
    }
}

/// `n_mels x n_frames` natural-log mel amplitudes; row = mel channel.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram<T> {
    values: Array2<T>,
    sample_rate: u32,
    hop: usize,
}

impl<T: Scalar> MelSpectrogram<T> {
    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn n_mels(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.values.ncols()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn convert<U: Scalar>(&self) -> MelSpectrogram<U> {
        MelSpectrogram {
            values: self.values.mapv(|v| U::of(v.as_f64())),
            sample_rate: self.sample_rate,
            hop: self.hop,
        }
    }
}

/// Filterbank plus configuration, built once and shared across workers.
#[derive(Debug, Clone)]
pub struct MelExtractor<T> {
    spectrogram: SpectrogramConfig,
    mel: MelConfig,
    filterbank: MelFilterbank<T>,
}

impl<T: Scalar> MelExtractor<T> {
    pub fn new(spectrogram: SpectrogramConfig, mel: MelConfig, sample_rate: u32) -> Result<Self, FeatureError> {
        spectrogram.validate()?;
        let filterbank = MelFilterbank::new(&mel, spectrogram.n_fft, sample_rate)?;
        Ok(Self { spectrogram, mel, filterbank })
    }

    pub fn filterbank(&self) -> &MelFilterbank<T> {
        &self.filterbank
    }

    pub fn spectrogram_config(&self) -> &SpectrogramConfig {
        &self.spectrogram
    }

    pub fn mel_config(&self) -> &MelConfig {
        &self.mel
    }

    pub fn compute(&self, buf: &AudioBuffer<T>) -> Result<MelSpectrogram<T>, FeatureError> {
        let expected = self.filterbank.sample_rate();
        if buf.sample_rate() != expected {
            return Err(FeatureError::WrongSampleRate { expected, found: buf.sample_rate() });
        }
        let magnitude = stft_magnitude(buf, &self.spectrogram)?;
        let floor = T::of(self.mel.clip_floor);
        let projected = self.filterbank.apply(&magnitude);
        Ok(MelSpectrogram {
            values: projected.mapv(|v| v.max(floor).ln()),
            sample_rate: expected,
            hop: self.spectrogram.hop,
        })
    }
}

/// Log-mel spectrogram of audio at the canonical 22,050 Hz rate.
pub fn mel_spectrogram<T: Scalar>(
    buf: &AudioBuffer<T>,
    spectrogram: &SpectrogramConfig,
    mel: &MelConfig,
) -> Result<MelSpectrogram<T>, FeatureError> {
    if buf.sample_rate() != CANONICAL_SAMPLE_RATE {
        return Err(FeatureError::WrongSampleRate { expected: CANONICAL_SAMPLE_RATE, found: buf.sample_rate() });
    }
    MelExtractor::new(spectrogram.clone(), mel.clone(), CANONICAL_SAMPLE_RATE)?.compute(buf)
}
