//! Run manifests: the command with every resolved argument, plus SHA-256
//! digests of the channel file and of each output.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;
use crate::error::CliResult;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: Command,
    pub seed: Option<u64>,
    /// Enumeration budget in force for the run.
    pub budget: u128,
    pub channel: Option<FileDigest>,
    /// Output files relative to the output directory, sorted by name.
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path, label: String) -> CliResult<FileDigest> {
    Ok(FileDigest {
        path: label,
        sha256: sha256_hex(&fs::read(path)?),
    })
}

impl Manifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}
