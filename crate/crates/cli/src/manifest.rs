//! Per-run provenance manifests.
//!
//! Every subcommand writes `manifest_<command>.json` next to its outputs,
//! recording inputs, seed, parameter values, tool version, and wall time.
//! Data files point back via a `manifest=<file>` comment, so any artifact
//! can be traced to the run that produced it. Wall time varies between
//! runs; the data files themselves stay byte-identical.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::time::Instant;

use aftershock_core::{Error, Result};
use serde::Serialize;

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    tool: &'a str,
    version: &'a str,
    inputs: &'a BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    parameters: &'a BTreeMap<String, String>,
    outputs: &'a [String],
    wall_time_secs: f64,
}

/// Accumulates run metadata; construct first so the clock covers the whole
/// command, write last.
pub struct ManifestBuilder {
    command: String,
    started: Instant,
    inputs: BTreeMap<String, String>,
    seed: Option<u64>,
    parameters: BTreeMap<String, String>,
    outputs: Vec<String>,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            started: Instant::now(),
            inputs: BTreeMap::new(),
            seed: None,
            parameters: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.to_string(), path.display().to_string());
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn parameter(&mut self, key: &str, value: impl Display) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// The comment line data files carry to reference this manifest.
    pub fn reference(&self) -> String {
        format!("manifest={}", file_name(&self.command))
    }

    /// Serialize to `manifest_<command>.json` inside `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let manifest = Manifest {
            command: &self.command,
            tool: "aftershock",
            version: env!("CARGO_PKG_VERSION"),
            inputs: &self.inputs,
            seed: self.seed,
            parameters: &self.parameters,
            outputs: &self.outputs,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
        };
        let path = dir.join(file_name(&self.command));
        let json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Data(format!("manifest serialization failed: {e}")))?;
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}

pub fn file_name(command: &str) -> String {
    format!("manifest_{command}.json")
}
