use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// `run.json`: what was run, with which resolved config, on which bytes.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub threads: Option<usize>,
    pub config: RunConfig,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

pub fn digest(path: &Path) -> anyhow::Result<InputDigest> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(InputDigest {
        path: path.display().to_string(),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

impl Manifest {
    pub fn new(command: &str, threads: Option<usize>, config: RunConfig) -> Manifest {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            argv: std::env::args().collect(),
            threads,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> anyhow::Result<()> {
        self.inputs.push(digest(path)?);
        Ok(())
    }

    /// Writes `contents` to `dir/name` and records it.
    pub fn write(&mut self, dir: &Path, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
        let path = dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    pub fn finish(mut self, dir: &Path) -> anyhow::Result<()> {
        self.outputs.sort();
        let text = serde_json::to_string_pretty(&self)?;
        let path = dir.join("run.json");
        std::fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
    }
}
