use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const FILE_NAME: &str = "manifest.json";

/// What a run needs to be repeated, and digests of what it wrote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    /// File name to hex SHA-256.
    pub outputs: BTreeMap<String, String>,
}

/// Collects output files in one directory and records their digests.
pub struct OutputDir {
    dir: PathBuf,
    digests: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            digests: BTreeMap::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.digests
            .insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable output");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn finish(self, command: &str, config: serde_json::Value, seed: u64) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            command: command.to_string(),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.digests,
        };
        let path = self.dir.join(FILE_NAME);
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("serializable manifest");
        bytes.push(b'\n');
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Names whose digests differ between the two manifests, or that only
    /// one of them has.
    pub fn mismatches(&self, other: &RunManifest) -> Vec<String> {
        let mut names: Vec<&String> = self.outputs.keys().chain(other.outputs.keys()).collect();
        names.sort();
        names.dedup();
        names
            .into_iter()
            .filter(|n| self.outputs.get(*n) != other.outputs.get(*n))
            .cloned()
            .collect()
    }
}
