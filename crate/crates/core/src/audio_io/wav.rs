//! Minimal RIFF/WAVE codec: PCM16 and IEEE float32 in, PCM16 out.

use std::fs;
use std::path::Path;

use log::warn;

use super::{AudioBuffer, AudioError};
use crate::Scalar;

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_IEEE_FLOAT: u16 = 0x0003;
const FORMAT_ALAW: u16 = 0x0006;
const FORMAT_MULAW: u16 = 0x0007;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Pcm16,
    Float32,
}

#[derive(Debug)]
struct Format {
    encoding: Encoding,
    channels: u16,
    sample_rate: u32,
    block_align: usize,
}

fn malformed(msg: impl Into<String>) -> AudioError {
    AudioError::MalformedWav(msg.into())
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(chunk: &[u8]) -> Result<Format, AudioError> {
    if chunk.len() < 16 {
        return Err(malformed(format!("fmt chunk is {} bytes, need 16", chunk.len())));
    }
    let mut tag = u16_at(chunk, 0);
    let channels = u16_at(chunk, 2);
    let sample_rate = u32_at(chunk, 4);
    let block_align = usize::from(u16_at(chunk, 12));
    let bits = u16_at(chunk, 14);

    if tag == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) then the sub-format GUID,
        // whose first two bytes carry the real format tag.
        if chunk.len() < 40 {
            return Err(malformed("extensible fmt chunk shorter than 40 bytes"));
        }
        tag = u16_at(chunk, 24);
    }

    let encoding = match (tag, bits) {
        (FORMAT_PCM, 16) => Encoding::Pcm16,
        (FORMAT_IEEE_FLOAT, 32) => Encoding::Float32,
        (FORMAT_PCM, b) => {
            return Err(AudioError::UnsupportedEncoding(format!("{b}-bit integer PCM")))
        }
        (FORMAT_IEEE_FLOAT, b) => {
            return Err(AudioError::UnsupportedEncoding(format!("{b}-bit float")))
        }
        (FORMAT_ALAW, _) => return Err(AudioError::UnsupportedEncoding("A-law".into())),
        (FORMAT_MULAW, _) => return Err(AudioError::UnsupportedEncoding("mu-law".into())),
        (t, _) => {
            return Err(AudioError::UnsupportedEncoding(format!("format tag {t:#06x}")))
        }
    };

    if channels == 0 {
        return Err(malformed("zero channels"));
    }
    if sample_rate == 0 {
        return Err(malformed("zero sample rate"));
    }
    let bytes_per_sample = if encoding == Encoding::Pcm16 { 2 } else { 4 };
    if block_align != bytes_per_sample * usize::from(channels) {
        return Err(malformed(format!(
            "block align {block_align} inconsistent with {channels} channel(s) of {bits}-bit samples"
        )));
    }
    Ok(Format { encoding, channels, sample_rate, block_align })
}

/// Decodes a RIFF/WAVE byte stream into a mono buffer.
///
/// Integer samples are scaled by 1/32768. Multi-channel input is averaged
/// down to mono.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer<f32>, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE header"));
    }
    let riff_len = u32_at(bytes, 4) as usize;
    if riff_len < 4 || riff_len + 8 > bytes.len() {
        return Err(malformed(format!(
            "RIFF size {riff_len} does not fit a {}-byte file",
            bytes.len()
        )));
    }
    let body = &bytes[12..8 + riff_len];

    let mut format = None;
    let mut data = None;
    let mut pos = 0;
    while pos + 8 <= body.len() {
        let id = &body[pos..pos + 4];
        let len = u32_at(body, pos + 4) as usize;
        let start = pos + 8;
        let end = start
            .checked_add(len)
            .filter(|&e| e <= body.len())
            .ok_or_else(|| {
                malformed(format!(
                    "chunk {:?} claims {len} bytes past the end of the file",
                    String::from_utf8_lossy(id)
                ))
            })?;
        match id {
            b"fmt " => format = Some(parse_fmt(&body[start..end])?),
            b"data" => {
                if format.is_none() {
                    return Err(malformed("data chunk precedes fmt chunk"));
                }
                data = Some(&body[start..end]);
            }
            _ => {}
        }
        // chunks are word aligned
        pos = end + (len & 1);
    }

    let format = format.ok_or_else(|| malformed("no fmt chunk"))?;
    let data = data.ok_or_else(|| malformed("no data chunk"))?;

    let frames = data.len() / format.block_align;
    if frames == 0 {
        return Err(AudioError::EmptyAudio);
    }
    let channels = usize::from(format.channels);
    if channels > 1 {
        warn!("downmixing {channels}-channel audio to mono by averaging");
    }

    let mut samples = Vec::with_capacity(frames);
    for frame in data.chunks_exact(format.block_align) {
        let mut acc = 0.0f64;
        for ch in 0..channels {
            acc += match format.encoding {
                Encoding::Pcm16 => f64::from(i16::from_le_bytes([frame[2 * ch], frame[2 * ch + 1]])) / 32768.0,
                Encoding::Float32 => {
                    let at = 4 * ch;
                    let v = f32::from_le_bytes([frame[at], frame[at + 1], frame[at + 2], frame[at + 3]]);
                    if !v.is_finite() {
                        return Err(malformed("non-finite float sample"));
                    }
                    f64::from(v.clamp(-1.0, 1.0))
                }
            };
        }
        samples.push((acc / channels as f64) as f32);
    }
    AudioBuffer::new(samples, format.sample_rate)
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer<f32>, AudioError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| AudioError::Io { path: path.to_path_buf(), source })?;
    decode_wav(&bytes)
}

fn quantize(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Encodes a buffer as 16-bit PCM mono with a canonical 44-byte header.
pub fn encode_wav<T: Scalar>(buf: &AudioBuffer<T>) -> Result<Vec<u8>, AudioError> {
    if buf.is_empty() {
        return Err(AudioError::EmptyAudio);
    }
    let data_len = u32::try_from(buf.len() * 2)
        .ok()
        .filter(|&n| n <= u32::MAX - 36)
        .ok_or_else(|| malformed("buffer too long for a RIFF file"))?;
    let rate = buf.sample_rate();

    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in buf.samples() {
        out.extend_from_slice(&quantize(s.as_f64()).to_le_bytes());
    }
    Ok(out)
}

pub fn write_wav<T: Scalar>(buf: &AudioBuffer<T>, path: impl AsRef<Path>) -> Result<(), AudioError> {
    let path = path.as_ref();
    let bytes = encode_wav(buf)?;
    fs::write(path, bytes).map_err(|source| AudioError::Io { path: path.to_path_buf(), source })
}
