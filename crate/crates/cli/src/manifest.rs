//! Run manifests written next to every output file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Wall-clock data, kept apart so reruns compare equal outside this field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    /// BI-AWGN capacity `Eb/N0` in dB, keyed by rate.
    pub capacity_db: BTreeMap<String, f64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub timing: Timing,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Collects manifest fields while a command runs.
pub struct ManifestBuilder {
    command: String,
    config: serde_json::Value,
    seeds: Vec<u64>,
    capacity_db: BTreeMap<String, f64>,
    inputs: Vec<PathBuf>,
    started: Instant,
    started_unix_s: u64,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: impl Serialize) -> Self {
        Self {
            command: command.to_string(),
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            seeds: Vec::new(),
            capacity_db: BTreeMap::new(),
            inputs: Vec::new(),
            started: Instant::now(),
            started_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seeds.push(seed);
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn capacity(&mut self, rate: f64, db: f64) -> &mut Self {
        self.capacity_db.insert(format!("{rate}"), db);
        self
    }

    /// Writes one manifest per output file. Input digests that differ from a
    /// manifest left by an earlier run are reported as warnings.
    pub fn finish(&self, outputs: &[&Path]) -> Result<(), CliError> {
        let inputs = digests(&self.inputs)?;
        let outs = digests(&outputs.iter().map(|p| p.to_path_buf()).collect::<Vec<_>>())?;
        let manifest = RunManifest {
            command: self.command.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.config.clone(),
            seeds: self.seeds.clone(),
            capacity_db: self.capacity_db.clone(),
            inputs,
            outputs: outs,
            timing: Timing {
                started_unix_s: self.started_unix_s,
                wall_clock_s: self.started.elapsed().as_secs_f64(),
            },
        };
        for out in outputs {
            let path = manifest_path(out);
            warn_on_changed_inputs(&path, &manifest.inputs);
            let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
            std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        }
        Ok(())
    }
}

fn digests(paths: &[PathBuf]) -> Result<Vec<FileDigest>, CliError> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

fn warn_on_changed_inputs(previous: &Path, inputs: &[FileDigest]) {
    let Ok(text) = std::fs::read_to_string(previous) else {
        return;
    };
    let Ok(old) = serde_json::from_str::<RunManifest>(&text) else {
        return;
    };
    for d in inputs {
        if let Some(o) = old.inputs.iter().find(|o| o.path == d.path) {
            if o.sha256 != d.sha256 {
                log::warn!(
                    "input {} changed since the previous run recorded in {}",
                    d.path,
                    previous.display()
                );
            }
        }
    }
}
