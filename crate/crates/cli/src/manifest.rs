//! Run manifests: one `manifest.json` per output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use t4d_harness::sha256_hex;

use crate::error::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub config: Value,
    /// Input files and their sha256, keyed by path as given.
    pub inputs: BTreeMap<String, String>,
    /// Emitted files (relative to the directory) and their sha256.
    pub outputs: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: String,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn hash_file(path: &Path) -> Result<String, CliError> {
    Ok(sha256_hex(fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?))
}

/// Writes the files and a manifest describing them into `dir`.
pub struct OutputDir<'a> {
    dir: &'a Path,
    outputs: BTreeMap<String, String>,
    inputs: BTreeMap<String, String>,
    started_at: String,
}

impl<'a> OutputDir<'a> {
    pub fn create(dir: &'a Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir, outputs: BTreeMap::new(), inputs: BTreeMap::new(), started_at: now() })
    }

    pub fn path(&self, name: &str) -> std::path::PathBuf {
        self.dir.join(name)
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.insert(path.display().to_string(), hash_file(path)?);
        Ok(())
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::write(self.dir.join(name), contents)?;
        self.outputs.insert(name.to_string(), sha256_hex(contents));
        Ok(())
    }

    pub fn finish(self, command: &str, config: Value) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            inputs: self.inputs,
            outputs: self.outputs,
            started_at: self.started_at,
            finished_at: now(),
        };
        fs::write(self.dir.join(MANIFEST_NAME), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(manifest)
    }
}
