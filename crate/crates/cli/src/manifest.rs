//! Run manifests: which experiment stages are complete for a config.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Relative to the output directory.
    pub outputs: Vec<PathBuf>,
    pub completed_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub created_unix: u64,
    pub updated_unix: u64,
    pub stages: BTreeMap<String, StageRecord>,
    #[serde(skip)]
    dir: PathBuf,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    /// Opens the manifest in `dir`. A manifest written for a different
    /// config hash is discarded.
    pub fn open(dir: &Path, config_hash: &str) -> anyhow::Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        if path.is_file() {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            match serde_json::from_str::<RunManifest>(&text) {
                Ok(mut m) if m.config_hash == config_hash => {
                    m.dir = dir.to_path_buf();
                    return Ok(m);
                }
                Ok(_) => log::info!("config changed since the last run; starting afresh"),
                Err(e) => log::warn!("ignoring unreadable manifest {}: {e}", path.display()),
            }
        }
        let t = now();
        Ok(RunManifest {
            config_hash: config_hash.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: t,
            updated_unix: t,
            stages: BTreeMap::new(),
            dir: dir.to_path_buf(),
        })
    }

    /// True when `stage` completed and all of its outputs still exist.
    pub fn is_complete(&self, stage: &str) -> bool {
        self.stages
            .get(stage)
            .is_some_and(|r| r.outputs.iter().all(|p| self.dir.join(p).is_file()))
    }

    /// Records `stage` with `outputs` (absolute or relative to the output
    /// directory) and saves the manifest.
    pub fn complete(&mut self, stage: &str, outputs: &[&Path]) -> anyhow::Result<()> {
        let outputs = outputs
            .iter()
            .map(|p| p.strip_prefix(&self.dir).unwrap_or(p).to_path_buf())
            .collect();
        let t = now();
        self.stages.insert(
            stage.to_string(),
            StageRecord {
                outputs,
                completed_unix: t,
            },
        );
        self.updated_unix = t;
        self.save()
    }

    pub fn save(&self) -> anyhow::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let path = self.dir.join(MANIFEST_FILE);
        let tmp = self.dir.join(format!("{MANIFEST_FILE}.tmp"));
        std::fs::write(&tmp, serde_json::to_string_pretty(self)? + "\n")?;
        std::fs::rename(&tmp, &path).with_context(|| format!("writing {}", path.display()))
    }
}
