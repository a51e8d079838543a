use std::fs;
use std::path::Path;
use std::time::Instant;

use latolato_core::{Error, RunConfig};
use serde::{Deserialize, Serialize};

use crate::{write_json, Outcome};

/// Written next to every set of outputs. Its `config` is fully resolved, so
/// passing the manifest back as `--config` regenerates the same files.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    /// Phase offset of each drive stage (rad).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive_phases: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<serde_json::Value>,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: Option<RunConfig>,
        drive_phases: Option<Vec<f64>>,
        inputs: Option<serde_json::Value>,
        outputs: Vec<String>,
        start: Instant,
    ) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            drive_phases,
            inputs,
            outputs,
            wall_clock_seconds: start.elapsed().as_secs_f64(),
        }
    }

    pub fn write(&self, dir: &Path) -> Outcome<()> {
        let mut ignored = Vec::new();
        write_json(dir, "manifest.json", self, &mut ignored)
    }
}

/// Accepts a plain run configuration or a manifest carrying one.
pub fn load_config(path: &Path) -> Outcome<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| crate::Failure::Io(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if value.get("command").is_some() && value.get("outputs").is_some() {
        let manifest: RunManifest =
            serde_json::from_value(value).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        return manifest
            .config
            .ok_or_else(|| Error::Parse(format!("{}: manifest carries no run configuration", path.display())).into());
    }
    Ok(RunConfig::from_json(&text)?)
}
