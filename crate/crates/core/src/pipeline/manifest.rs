use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Hash of every input that determines the stage's outputs.
    pub fingerprint: String,
    pub outputs: Vec<OutputRecord>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub catalog_hash: String,
    pub pathways_hash: String,
    pub weather_hash: String,
    pub seed: u64,
    /// Keyed `stage` or `stage:pathway`.
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn load_or_new(dir: &Path, fresh: RunManifest) -> Result<Self, PipelineError> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(fresh);
        }
        let text = std::fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
        let mut old: RunManifest = serde_json::from_slice(&text)?;
        old.tool_version = fresh.tool_version;
        old.config_hash = fresh.config_hash;
        old.catalog_hash = fresh.catalog_hash;
        old.pathways_hash = fresh.pathways_hash;
        old.weather_hash = fresh.weather_hash;
        old.seed = fresh.seed;
        Ok(old)
    }

    pub fn save(&self, dir: &Path) -> Result<(), PipelineError> {
        let path = dir.join(MANIFEST_FILE);
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        std::fs::write(&path, bytes).map_err(|e| PipelineError::io(&path, e))
    }

    /// Refuses unless `key` ran with `fingerprint` and its outputs are intact.
    pub fn require(&self, dir: &Path, key: &str, fingerprint: &str) -> Result<(), PipelineError> {
        let (stage, pathway) = key.split_once(':').map_or((key, None), |(s, p)| (s, Some(p)));
        let hint = match pathway {
            Some(p) => format!("run `nearopt {stage} --config <file> --pathway {p}` first"),
            None => format!("run `nearopt {stage} --config <file>` first"),
        };
        let stale = |reason: String| PipelineError::Stale {
            stage: key.to_string(),
            reason,
            hint: hint.clone(),
        };
        let record = self.stages.get(key).ok_or_else(|| stale("no recorded output".into()))?;
        if record.fingerprint != fingerprint {
            return Err(stale("inputs or settings changed since it ran".into()));
        }
        for out in &record.outputs {
            let bytes = std::fs::read(dir.join(&out.path)).map_err(|_| stale(format!("{} is missing", out.path)))?;
            if sha256_hex(&bytes) != out.sha256 {
                return Err(stale(format!("{} was modified", out.path)));
            }
        }
        Ok(())
    }

    /// Every recorded output exists with its recorded hash.
    pub fn verify_all(&self, dir: &Path) -> Result<(), PipelineError> {
        for (key, record) in &self.stages {
            self.require(dir, key, &record.fingerprint)?;
        }
        Ok(())
    }
}
