//! Run manifests: every command drops a JSON record next to its outputs with
//! the tool version, the resolved config and its hash, and SHA-256 checksums
//! of all inputs and outputs. No timestamps, so reruns stay byte-identical.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub config: PipelineConfig,
    /// Path (as referenced by the run) -> sha256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("cannot read {} for checksumming", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn config_hash(config: &PipelineConfig) -> Result<String> {
    let canonical = serde_json::to_vec(config).context("serialize config for hashing")?;
    Ok(hex::encode(Sha256::digest(&canonical)))
}

fn checksum_map(paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    paths
        .iter()
        .map(|p| Ok((p.display().to_string(), sha256_file(p)?)))
        .collect()
}

/// Write `run_manifest_<command>.json` into the output directory and return
/// its path.
pub fn write_run_manifest(
    config: &PipelineConfig,
    command: &str,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> Result<PathBuf> {
    let manifest = RunManifest {
        tool: "fcpipe".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config_hash: config_hash(config)?,
        config: config.clone(),
        inputs: checksum_map(inputs)?,
        outputs: checksum_map(outputs)?,
    };
    let path = config.out_dir.join(format!("run_manifest_{command}.json"));
    let file = std::fs::File::create(&path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &manifest)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

pub fn read_run_manifest(path: &Path) -> Result<RunManifest> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("cannot open run manifest {}", path.display()))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .with_context(|| format!("malformed run manifest {}", path.display()))
}

/// Look up the recorded checksum of an output file in a manifest.
pub fn recorded_checksum<'a>(manifest: &'a RunManifest, file_name: &str) -> Option<&'a str> {
    manifest
        .outputs
        .iter()
        .find(|(path, _)| Path::new(path).file_name().is_some_and(|f| f == file_name))
        .map(|(_, digest)| digest.as_str())
}
