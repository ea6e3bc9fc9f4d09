use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Analyze,
    Detect,
    Simulate,
    Calibrate,
    Compare,
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Reproducibility record written next to every output set. Carries no timestamps,
/// so identical runs produce identical manifests.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Command,
    pub tool_version: &'static str,
    pub input_paths: Vec<String>,
    pub output_dir: String,
    pub seeds: Vec<u64>,
    /// SHA-256 of the single consumed input, or of the newline-joined input digests.
    pub config_checksum: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects consumed inputs and written outputs, then seals them into `manifest.json`.
pub struct OutputSet {
    command: Command,
    dir: PathBuf,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    seeds: Vec<u64>,
}

impl OutputSet {
    pub fn create(command: Command, dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutputSet { command, dir: dir.to_path_buf(), inputs: Vec::new(), outputs: Vec::new(), seeds: Vec::new() })
    }

    /// Records an input by the exact bytes that were parsed.
    pub fn input(&mut self, label: impl Into<String>, bytes: &[u8]) {
        self.inputs.push(FileDigest { path: label.into(), sha256: sha256_hex(bytes) });
    }

    pub fn seed(&mut self, seed: u64) {
        if !self.seeds.contains(&seed) {
            self.seeds.push(seed);
        }
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(FileDigest { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn finish(self) -> Result<(), CliError> {
        let config_checksum = match self.inputs.as_slice() {
            [single] => single.sha256.clone(),
            many => {
                let joined: Vec<&str> = many.iter().map(|d| d.sha256.as_str()).collect();
                sha256_hex(joined.join("\n").as_bytes())
            }
        };
        let manifest = RunManifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION"),
            input_paths: self.inputs.iter().map(|d| d.path.clone()).collect(),
            output_dir: self.dir.display().to_string(),
            seeds: self.seeds,
            config_checksum,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}
