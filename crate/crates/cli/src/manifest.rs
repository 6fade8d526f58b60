//! Per-command run manifests: what went in, what came out, and how long it took. Wall-clock
//! data lives only here, so primary artifacts stay byte-identical across reruns.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// SHA-256 of the effective configuration (file merged with flags), as canonical JSON.
    pub config_hash: String,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub parameters: serde_json::Value,
    pub started_at_ms: u64,
    pub duration_ms: u64,
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_of<T: Serialize>(value: &T) -> String {
    hex(&Sha256::digest(serde_json::to_vec(value).expect("serialisable")))
}

pub fn digest_file(path: &Path) -> CliResult<FileDigest> {
    let mut file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = file.read(&mut buf).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        bytes += n as u64;
    }
    Ok(FileDigest { path: path.to_path_buf(), sha256: hex(&hasher.finalize()), bytes })
}

/// Collects inputs and outputs while a command runs, then writes `<out>/<command>.manifest.json`.
pub struct ManifestBuilder {
    command: String,
    config_hash: String,
    seed: u64,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    parameters: serde_json::Value,
    started_at_ms: u64,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, config_hash: String, seed: u64) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            config_hash,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            parameters: serde_json::Value::Null,
            started_at_ms: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0),
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, path: impl Into<PathBuf>) -> &mut Self {
        self.inputs.push(path.into());
        self
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) -> &mut Self {
        self.outputs.push(path.into());
        self
    }

    pub fn parameters(&mut self, value: impl Serialize) -> &mut Self {
        self.parameters = serde_json::to_value(value).expect("serialisable");
        self
    }

    pub fn finish(&self, out_dir: &Path) -> CliResult<PathBuf> {
        let digests = |paths: &[PathBuf]| {
            paths.iter().filter(|p| p.is_file()).map(|p| digest_file(p)).collect::<CliResult<Vec<_>>>()
        };
        let manifest = RunManifest {
            command: self.command.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            inputs: digests(&self.inputs)?,
            outputs: digests(&self.outputs)?,
            parameters: self.parameters.clone(),
            started_at_ms: self.started_at_ms,
            duration_ms: self.started.elapsed().as_millis() as u64,
        };
        let path = out_dir.join(format!("{}.manifest.json", self.command));
        write_json(&path, &manifest)?;
        Ok(path)
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
