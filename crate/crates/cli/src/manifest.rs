use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::io;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    /// File name (relative to the output directory when inside it) to SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub started_at: Option<String>,
    pub finished_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub config_sha256: String,
    pub stages: BTreeMap<String, StageRecord>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn config_digest(cfg: &PipelineConfig) -> Result<String, CliError> {
    let mut c = cfg.clone();
    // The output location does not change any result.
    c.output_dir = Default::default();
    Ok(hex::encode(Sha256::digest(io::canonical_json(&c)?.as_bytes())))
}

fn label(out_dir: &Path, path: &Path) -> String {
    path.strip_prefix(out_dir).unwrap_or(path).display().to_string()
}

fn now() -> String {
    let d = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).unwrap_or_default();
    format!("{}.{:03}", d.as_secs(), d.subsec_millis())
}

/// Collects digests for one stage and merges them into manifest.json.
pub struct StageLog {
    name: &'static str,
    record: StageRecord,
    timestamps: bool,
}

impl StageLog {
    pub fn start(name: &'static str, cfg: &PipelineConfig) -> Self {
        let timestamps = cfg.manifest.timestamps;
        let record = StageRecord { started_at: timestamps.then(now), ..StageRecord::default() };
        Self { name, record, timestamps }
    }

    pub fn input(&mut self, cfg: &PipelineConfig, path: &Path) -> Result<(), CliError> {
        self.record.inputs.insert(label(&cfg.output_dir, path), sha256_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, cfg: &PipelineConfig, path: &Path) -> Result<(), CliError> {
        self.record.outputs.insert(label(&cfg.output_dir, path), sha256_file(path)?);
        Ok(())
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let m = message.into();
        log::warn!("{}: {m}", self.name);
        self.record.warnings.push(m);
    }

    pub fn finish(mut self, cfg: &PipelineConfig) -> Result<(), CliError> {
        if self.timestamps {
            self.record.finished_at = Some(now());
        }
        let path = cfg.output(MANIFEST_FILE);
        let digest = config_digest(cfg)?;
        let mut manifest = match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str::<RunManifest>(&text)
                .ok()
                .filter(|m| m.config_sha256 == digest)
                .unwrap_or_else(|| fresh(&digest)),
            Err(_) => fresh(&digest),
        };
        manifest.stages.insert(self.name.to_string(), self.record);
        io::write_json(&path, &manifest)
    }
}

fn fresh(digest: &str) -> RunManifest {
    RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: digest.to_string(),
        stages: BTreeMap::new(),
    }
}
