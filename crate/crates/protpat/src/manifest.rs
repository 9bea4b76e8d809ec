use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::formats::write_file;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Record of one command run. The thread count is deliberately absent: it
/// never changes outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<FileDigest>,
    pub out: String,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path, label: String) -> Result<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(FileDigest { path: label, sha256: sha256_hex(&bytes) })
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, out: &Path) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
            out: out.display().to_string(),
            outputs: Vec::new(),
        }
    }

    pub fn parameter(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let d = digest_file(path, path.display().to_string())?;
        self.inputs.push(d);
        Ok(())
    }

    /// Write `contents` to `name` inside the output directory and record it.
    pub fn emit(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = Path::new(&self.out).join(name);
        write_file(&path, contents.as_ref())?;
        self.outputs.push(FileDigest { path: name.to_string(), sha256: sha256_hex(contents.as_ref()) });
        Ok(())
    }

    /// Record a file already written into the output directory.
    pub fn record(&mut self, name: &str) -> Result<()> {
        let path = Path::new(&self.out).join(name);
        let d = digest_file(&path, name.to_string())?;
        self.outputs.push(d);
        Ok(())
    }

    pub fn write(&self) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self).expect("manifest serializes");
        json.push('\n');
        write_file(&Path::new(&self.out).join(MANIFEST_FILE), json)
    }
}
