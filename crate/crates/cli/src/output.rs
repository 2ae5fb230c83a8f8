//! Output directory with a hashed manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::hex;

#[derive(Debug, Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    command: &'a str,
    config_hash: &'a str,
    seed: u64,
    format: &'a str,
    files: &'a [FileEntry],
}

/// Files are written in call order; nothing here depends on wall time or
/// thread count.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        fs::write(self.root.join(name), bytes)?;
        self.files.push(FileEntry { path: name.into(), sha256: hex(&Sha256::digest(bytes)) });
        Ok(())
    }

    pub fn finish(self, command: &str, config_hash: &str, seed: u64, format: &str) -> std::io::Result<()> {
        let manifest = Manifest {
            tool: "tlsbath",
            version: env!("CARGO_PKG_VERSION"),
            core_version: tlsbath::VERSION,
            command,
            config_hash,
            seed,
            format,
            files: &self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(self.root.join("manifest.json"), text)
    }
}
