//! `MEL1` binary container: magic, `u32` n_mels, `u32` n_frames, then
//! row-major little-endian `f32` values (row = mel channel).

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{FeatureError, MelConfig, MelSpectrogram, SpectrogramConfig};
use crate::Scalar;

pub const MEL1_MAGIC: &[u8; 4] = b"MEL1";
const HEADER_LEN: usize = 12;

/// JSON record written next to every `MEL1` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelSidecar {
    pub format: String,
    pub n_mels: usize,
    pub n_frames: usize,
    pub sample_rate: u32,
    pub spectrogram: SpectrogramConfig,
    pub mel: MelConfig,
    /// SHA-256 of the source audio file, hex encoded.
    pub source_sha256: String,
}

impl MelSidecar {
    pub fn new<T: Scalar>(
        mel: &MelSpectrogram<T>,
        spectrogram_cfg: &SpectrogramConfig,
        mel_cfg: &MelConfig,
        source_sha256: String,
    ) -> Self {
        Self {
            format: "MEL1".to_string(),
            n_mels: mel.n_mels(),
            n_frames: mel.n_frames(),
            sample_rate: mel.sample_rate(),
            spectrogram: spectrogram_cfg.clone(),
            mel: mel_cfg.clone(),
            source_sha256,
        }
    }
}

pub fn encode_mel1<T: Scalar>(mel: &MelSpectrogram<T>) -> Result<Vec<u8>, FeatureError> {
    let dim = |n: usize| u32::try_from(n).map_err(|_| FeatureError::MalformedMel1(format!("dimension {n} exceeds u32")));
    let (rows, cols) = (dim(mel.n_mels())?, dim(mel.n_frames())?);
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * mel.values().len());
    out.extend_from_slice(MEL1_MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for row in mel.values().rows() {
        for v in row {
            out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_mel1(bytes: &[u8]) -> Result<Array2<f32>, FeatureError> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MEL1_MAGIC {
        return Err(FeatureError::MalformedMel1("missing MEL1 header".into()));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    let expected = rows.checked_mul(cols).and_then(|n| n.checked_mul(4));
    if expected != Some(body.len()) {
        return Err(FeatureError::MalformedMel1(format!(
            "{rows}x{cols} header but {} payload bytes",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Array2::from_shape_vec((rows, cols), values).expect("length checked above"))
}

pub fn write_mel1<T: Scalar>(mel: &MelSpectrogram<T>, path: impl AsRef<Path>) -> Result<(), FeatureError> {
    fs::write(path, encode_mel1(mel)?)?;
    Ok(())
}

pub fn read_mel1(path: impl AsRef<Path>) -> Result<Array2<f32>, FeatureError> {
    decode_mel1(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio_io::AudioBuffer;
    use crate::features::mel_spectrogram;

    #[test]
    fn layout_and_roundtrip() {
        let buf = AudioBuffer::new((0..3000).map(|n| (n as f64 * 0.01).sin() * 0.2).collect(), 22_050).unwrap();
        let mel = mel_spectrogram(&buf, &SpectrogramConfig::default(), &MelConfig::default()).unwrap();
        let bytes = encode_mel1(&mel).unwrap();
        assert_eq!(&bytes[..4], b"MEL1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 80);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), mel.n_frames() as u32);
        assert_eq!(bytes.len(), 12 + 4 * 80 * mel.n_frames());
        // second value of the file is row 0, frame 1
        let second = f32::from_le_bytes(bytes[16..20].try_into().unwrap());
        assert_eq!(second, mel.values()[(0, 1)] as f32);

        let back = decode_mel1(&bytes).unwrap();
        assert_eq!(back, mel.values().mapv(|v| v as f32));
    }

    #[test]
    fn rejects_bad_payloads() {
        assert!(decode_mel1(b"MEL0\0\0\0\0\0\0\0\0").is_err());
        let mut bytes = b"MEL1".to_vec();
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&[0; 12]);
        assert!(matches!(decode_mel1(&bytes), Err(FeatureError::MalformedMel1(_))));
    }
}
