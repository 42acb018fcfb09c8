//! The run manifest: what each command produced, under which config and data.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use loadcast_core::imputation::ImputeMethod;
use loadcast_core::metrics::ReportRow;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::{read_json, write_json};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelStatus {
    Trained,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub status: ModelStatus,
    pub seed: u64,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    /// First and last hour of the cache, ISO 8601 UTC.
    pub start: String,
    pub end: String,
    pub hours: usize,
    pub channels: Vec<String>,
    pub structural_gaps: usize,
    pub structural_gap_hours: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub train_hours: usize,
    pub test_hours: usize,
    /// First test hour.
    pub test_start: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodScore {
    pub method: ImputeMethod,
    pub rmse: f64,
    pub mae: f64,
    pub emd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationRecord {
    pub chosen: ImputeMethod,
    pub window_start: String,
    pub window_hours: usize,
    pub masked_start: String,
    pub masked_hours: usize,
    pub scores: Vec<MethodScore>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    #[serde(default)]
    pub data_fingerprint: Option<String>,
    #[serde(default)]
    pub data: Option<DataSummary>,
    #[serde(default)]
    pub split: Option<SplitSummary>,
    #[serde(default)]
    pub imputation: Option<ImputationRecord>,
    #[serde(default)]
    pub models: BTreeMap<String, ModelRecord>,
    #[serde(default)]
    pub metrics: Vec<ReportRow>,
    #[serde(default)]
    pub evaluation_failures: BTreeMap<String, String>,
    /// Other files written by the pipeline, relative to the output directory.
    #[serde(default)]
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(config_hash: &str) -> Self {
        RunManifest {
            config_hash: config_hash.to_string(),
            ..RunManifest::default()
        }
    }

    /// The manifest in `dir` if it was written under `config_hash`, else a fresh one.
    pub fn load_or_new(dir: &Path, config_hash: &str) -> Self {
        let fresh = || RunManifest::new(config_hash);
        match read_json::<RunManifest>(&dir.join(MANIFEST_FILE)) {
            Ok(m) if m.config_hash == config_hash => m,
            Ok(_) => {
                log::info!("config changed since the last run; starting a new manifest");
                fresh()
            }
            Err(_) => fresh(),
        }
    }

    pub fn add_output(&mut self, rel: &str) {
        if !self.outputs.iter().any(|o| o == rel) {
            self.outputs.push(rel.to_string());
            self.outputs.sort();
        }
    }

    /// Drop references to files that do not exist, then write.
    pub fn save(mut self, dir: &Path) -> Result<()> {
        let exists = |rel: &String| dir.join(rel).is_file();
        self.outputs.retain(exists);
        for record in self.models.values_mut() {
            record.artifacts.retain(exists);
        }
        write_json(&dir.join(MANIFEST_FILE), &self)
    }
}

/// `path` relative to `dir`, with forward slashes.
pub fn relative(dir: &Path, path: &Path) -> String {
    let rel: PathBuf = path
        .strip_prefix(dir)
        .map_or_else(|_| path.to_path_buf(), Path::to_path_buf);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}
