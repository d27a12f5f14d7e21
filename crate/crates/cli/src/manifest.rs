use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Written as `manifest.json` next to the outputs of every command.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Every setting the run used, defaults included.
    pub config: Value,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    pub version: String,
    pub argv: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: Value, seed: u64, argv: &[String]) -> Self {
        Self {
            command: command.into(),
            config,
            seed,
            inputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").into(),
            argv: argv.to_vec(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        crate::commands::write_file(&dir.join("manifest.json"), &text)
    }
}
