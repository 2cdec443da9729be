//! End-to-end commands: synth → prepare → train → sample → evaluate → report.
//!
//! Every command writes `manifest.json` into its output directory. Manifests
//! hold settings, seeds and content hashes but no paths or timestamps, so
//! identical runs produce identical bytes; wall-clock figures go to
//! `timing.json` instead.

mod commands;
mod config;
mod report;

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use commands::{cmd_evaluate, cmd_prepare, cmd_sample, cmd_synth, cmd_train, CorpusBundle};
pub use config::{Settings, KNOWN_KEYS};
pub use report::{cmd_report, render_table};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "CHEMLM_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Synth,
    Prepare,
    Train,
    Sample,
    Evaluate,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Prepare => "prepare",
            Command::Train => "train",
            Command::Sample => "sample",
            Command::Evaluate => "evaluate",
            Command::Report => "report",
        }
    }
}

/// `--out` if given, else `$CHEMLM_OUT/<command>`, else `chemlm-out/<command>`.
pub fn resolve_output_dir(explicit: Option<&Path>, command: Command) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("chemlm-out"))
            .join(command.name()),
    }
}

/// Runs one command, then records its outcome in the output manifest
/// (commands write their own manifest on success).
pub fn run(command: Command, settings: &Settings, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let result = match command {
        Command::Synth => cmd_synth(settings, out),
        Command::Prepare => cmd_prepare(settings, out),
        Command::Train => cmd_train(settings, out),
        Command::Sample => cmd_sample(settings, out),
        Command::Evaluate => cmd_evaluate(settings, out),
        Command::Report => cmd_report(settings, out).map(|_| ()),
    };
    if let Err(e) = &result {
        let manifest = json!({
            "command": command.name(),
            "status": "error",
            "error": e.to_string(),
        });
        // The original failure matters more than a failure to record it.
        let _ = write_json(&out.join("manifest.json"), &manifest);
    }
    result
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Content hash of a set of named blobs, independent of where they live.
pub(crate) fn tree_hash<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let mut lines: Vec<String> = entries
        .into_iter()
        .map(|(name, hash)| format!("{hash}  {name}\n"))
        .collect();
    lines.sort();
    sha256_hex(lines.concat().as_bytes())
}

/// Hashes of the named output files, for the manifest.
pub(crate) fn file_hashes(dir: &Path, names: &[&str]) -> Result<Value> {
    let mut map = serde_json::Map::new();
    for name in names {
        let path = dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        map.insert((*name).to_string(), Value::String(sha256_hex(&bytes)));
    }
    Ok(Value::Object(map))
}

/// Regular files in `dir`, sorted by name.
pub(crate) fn list_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub(crate) fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}
