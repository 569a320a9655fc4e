//! Output naming, provenance records and file writing.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::sha256_hex;
use crate::CliError;

pub const TOOL: &str = "ttsprep";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Where an artifact came from; identical inputs and parameters give an
/// identical record.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub input: String,
    pub input_sha256: String,
}

impl Provenance {
    pub fn new(config_sha256: &str, input: &str, input_sha256: String) -> Self {
        Self { tool: TOOL, version: VERSION, config_sha256: config_sha256.to_string(), input: input.to_string(), input_sha256 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub id: String,
    /// Manifest line of the utterance.
    pub line: Option<usize>,
    pub audio: String,
    pub error: String,
}

/// Per-command summary written next to the outputs.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub manifest_sha256: Option<String>,
    pub processed: usize,
    pub skipped: usize,
    pub failures: Vec<Failure>,
    /// SHA-256 of every file written, keyed by path relative to the output directory.
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<Value>,
}

impl RunReport {
    pub fn new(command: &'static str, config_sha256: String, manifest_sha256: Option<String>) -> Self {
        Self {
            command,
            tool: TOOL,
            version: VERSION,
            config_sha256,
            manifest_sha256,
            processed: 0,
            skipped: 0,
            failures: Vec::new(),
            outputs: BTreeMap::new(),
            extra: None,
        }
    }

    pub fn write(&self, out: &Path) -> Result<(), CliError> {
        write_json(&out.join(format!("{}_report.json", self.command)), self)?;
        Ok(())
    }
}

/// File stem for an utterance id. Ids that are not already safe file names
/// get the unsafe characters replaced and a short hash appended, so two ids
/// never share a stem.
pub fn output_stem(id: &str) -> String {
    let safe: String =
        id.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' }).collect();
    if safe == id && !id.starts_with('.') {
        safe
    } else {
        format!("{}-{}", safe.trim_start_matches('.'), &sha256_hex(id.as_bytes())[..8])
    }
}

pub fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io { path: path.to_path_buf(), source: e }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| io_error(path, e))
}

/// Writes `bytes`, creating parent directories, and returns their SHA-256.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<String, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_error(path, e))?;
    Ok(sha256_hex(bytes))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<String, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

/// Manifest line number of every id, for error messages.
pub fn line_numbers(manifest_text: &str) -> HashMap<String, usize> {
    manifest_text
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let v: Value = serde_json::from_str(line).ok()?;
            Some((v.get("id")?.as_str()?.to_string(), i + 1))
        })
        .collect()
}

/// Audio path as written in a manifest, resolved against the manifest's directory.
pub fn resolve_audio(manifest_dir: &Path, audio: &str) -> PathBuf {
    let p = Path::new(audio);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_dir.join(p)
    }
}

fn absolute(p: &Path) -> PathBuf {
    let p = std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            Component::ParentDir => {
                out.pop();
            }
            Component::CurDir => {}
            other => out.push(other),
        }
    }
    out
}

/// Rewrites a manifest audio path so it stays valid from `to_dir`: relative
/// when the file lies under `to_dir`, absolute otherwise.
pub fn rebase(audio: &str, from_dir: &Path, to_dir: &Path) -> String {
    if Path::new(audio).is_absolute() {
        return audio.to_string();
    }
    let (from, to) = (absolute(from_dir), absolute(to_dir));
    if from == to {
        return audio.to_string();
    }
    let full = absolute(&from.join(audio));
    match full.strip_prefix(&to) {
        Ok(rel) => rel.to_string_lossy().replace('\\', "/"),
        Err(_) => full.to_string_lossy().into_owned(),
    }
}
