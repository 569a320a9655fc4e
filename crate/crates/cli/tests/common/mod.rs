#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ttsprep::audio_io::{write_wav, AudioBuffer};
use ttsprep::dataset::{CorpusManifest, Emotion, Utterance};

#[path = "../../../core/tests/common/mod.rs"]
pub mod fixtures;

pub fn ttsprep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttsprep")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn entry(id: &str, audio: &str, speaker: &str, emotion: Emotion) -> Utterance {
    Utterance {
        id: id.into(),
        audio_path: audio.into(),
        text: "안녕하세요.".into(),
        speaker: speaker.into(),
        emotion,
        duration_s: None,
        n_mel_frames: None,
        flags: vec![],
    }
}

pub fn write_manifest(path: &Path, utts: Vec<Utterance>) {
    CorpusManifest::from_utterances(utts, 22_050).unwrap().write_jsonl(path).unwrap();
}

/// `lead` s of silence, `speech` s of multitone, `tail` s of silence.
pub fn padded_speech(rate: u32, lead: f64, speech: f64, tail: f64) -> AudioBuffer<f64> {
    let n = |s: f64| (s * f64::from(rate)).round() as usize;
    let mut x = vec![0.0; n(lead)];
    x.extend(fixtures::multitone(n(speech), rate).iter().map(|v| 0.8 * v));
    x.extend(vec![0.0; n(tail)]);
    AudioBuffer::new(x, rate).unwrap()
}

pub fn write_audio(path: &Path, buf: &AudioBuffer<f64>) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    write_wav(buf, path).unwrap();
}

/// Every file under `dir` with its bytes, sorted by relative path.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.push((path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}
