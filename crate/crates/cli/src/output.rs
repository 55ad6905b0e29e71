use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::args::Command;

/// Written alongside every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub invocation: Command,
    /// Fully resolved configuration the run was executed with.
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub version: String,
    pub duration_secs: f64,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(invocation: &Command, config: serde_json::Value, seeds: Vec<u64>) -> Self {
        Self {
            command: command_name(invocation).to_string(),
            invocation: invocation.clone(),
            config,
            seeds,
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_secs: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn finish(mut self, elapsed: Duration, outputs: Vec<PathBuf>) -> Self {
        self.duration_secs = elapsed.as_secs_f64();
        self.outputs = outputs;
        self
    }
}

pub fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate(_) => "simulate",
        Command::Fit(_) => "fit",
        Command::Factors(_) => "factors",
        Command::Tail(_) => "tail",
        Command::Bounds(_) => "bounds",
        Command::Experiment(_) => "experiment",
        Command::Replay(_) => "replay",
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// `<out>.manifest.json` next to a single-file output.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
