//! Run manifests: what a command read, how it was configured, and the
//! digests of everything it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ptq_core::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Digest of the parameters and input digests below.
    pub config_digest: String,
    pub master_seed: Option<u64>,
    pub tool_version: String,
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<FileDigest>,
    /// Paths are relative to the output directory.
    pub outputs: Vec<FileDigest>,
}

/// Collects inputs, parameters and outputs of one command run.
#[derive(Debug)]
pub struct RunRecorder {
    command: String,
    dir: PathBuf,
    master_seed: Option<u64>,
    parameters: BTreeMap<String, String>,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl RunRecorder {
    /// Creates `dir` if needed.
    pub fn new(command: &str, dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            command: command.to_string(),
            dir: dir.to_path_buf(),
            master_seed: None,
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn seed(&mut self, seed: Option<u64>) {
        self.master_seed = seed;
        self.param(
            "seed",
            seed.map_or_else(|| "none".to_string(), |s| s.to_string()),
        );
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn input_bytes(&mut self, name: &str, bytes: &[u8]) {
        self.inputs.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn input_file(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = read_file(path)?;
        self.input_bytes(&path.display().to_string(), &bytes);
        Ok(bytes)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, bytes).map_err(|source| Error::Io { path, source })?;
        self.outputs.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// The config digest ignores input paths so moved copies of the same
    /// files hash alike.
    fn config_digest(&self) -> Result<String> {
        let inputs: Vec<&str> = self.inputs.iter().map(|i| i.sha256.as_str()).collect();
        let canonical = serde_json::to_vec(&(&self.command, &self.parameters, inputs))?;
        Ok(sha256_hex(&canonical))
    }

    pub fn finish(self) -> Result<RunManifest> {
        let manifest = RunManifest {
            config_digest: self.config_digest()?,
            command: self.command,
            master_seed: self.master_seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            parameters: self.parameters,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join(MANIFEST_FILE);
        std::fs::write(&path, text).map_err(|source| Error::Io { path, source })?;
        Ok(manifest)
    }
}
