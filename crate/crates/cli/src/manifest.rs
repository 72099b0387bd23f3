//! `manifest.json`: what a run read, what it wrote, and with which tool.

use std::fs;
use std::path::{Path, PathBuf};

use parcel_denoise::Result;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// Hash of the effective configuration after flag overrides.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn digest(path: &Path, shown: String) -> Result<FileDigest> {
    Ok(FileDigest {
        path: shown,
        sha256: sha256_hex(&fs::read(path)?),
    })
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_sha256: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn config(&mut self, canonical: &str) {
        self.config_sha256 = Some(sha256_hex(canonical.as_bytes()));
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        if !self.inputs.iter().any(|d| Path::new(&d.path) == path) {
            self.inputs.push(digest(path, path.display().to_string())?);
        }
        Ok(())
    }

    /// Records files under `out_dir`, by their relative names.
    pub fn outputs(&mut self, out_dir: &Path, names: &[PathBuf]) -> Result<()> {
        for name in names {
            let shown = name.to_string_lossy().replace('\\', "/");
            self.outputs.push(digest(&out_dir.join(name), shown)?);
        }
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(out_dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}
