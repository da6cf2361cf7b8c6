//! Run manifests, appended one JSON line per run to `manifest.jsonl`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::HarnessError;
use crate::output::{Artifact, Format};
use crate::tasks::{TaskOutcome, TaskStatus};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub name: String,
    pub status: String,
    pub error: Option<String>,
    pub seconds: f64,
    pub artifacts: Vec<String>,
    /// Which eigenfunction normalization the task used.
    pub normalization: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run: String,
    pub command: String,
    pub tool_version: String,
    pub config_path: String,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub started_unix: f64,
    pub wall_seconds: f64,
    pub seed: u64,
    pub jobs: usize,
    pub format: Format,
    pub tasks: Vec<TaskRecord>,
    pub artifacts: Vec<ArtifactRecord>,
}

impl RunManifest {
    pub fn failed_tasks(&self) -> usize {
        self.tasks.iter().filter(|t| t.status != "ok").count()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes every artifact under `dir` and returns their records, in task order.
pub fn write_artifacts(dir: &Path, tasks: &[TaskOutcome]) -> Result<Vec<ArtifactRecord>, HarnessError> {
    let mut records = Vec::new();
    for Artifact { path, bytes } in tasks.iter().flat_map(|t| &t.artifacts) {
        let full = dir.join(path);
        std::fs::write(&full, bytes).map_err(|e| HarnessError::io(full.display().to_string(), e))?;
        records.push(ArtifactRecord { path: path.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
    }
    Ok(records)
}

pub fn task_record(t: &TaskOutcome) -> TaskRecord {
    TaskRecord {
        name: t.name.clone(),
        status: match t.status {
            TaskStatus::Ok => "ok".into(),
            TaskStatus::Failed => "failed".into(),
        },
        error: t.error.clone(),
        seconds: t.seconds,
        artifacts: t.artifacts.iter().map(|a| a.path.clone()).collect(),
        normalization: t.normalization.clone(),
    }
}

pub fn append(dir: &Path, manifest: &RunManifest) -> Result<(), HarnessError> {
    let path = dir.join(MANIFEST_FILE);
    let line = serde_json::to_string(manifest).map_err(|e| HarnessError::Task(e.to_string()))?;
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| HarnessError::io(path.display().to_string(), e))?;
    writeln!(file, "{line}").map_err(|e| HarnessError::io(path.display().to_string(), e))
}

/// Every manifest line in `dir`, oldest first.
pub fn read_all(dir: &Path) -> Result<Vec<RunManifest>, HarnessError> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(path.display().to_string(), e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| HarnessError::Task(format!("bad manifest line: {e}"))))
        .collect()
}
