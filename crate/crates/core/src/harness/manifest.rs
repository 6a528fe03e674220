//! Run manifest and the single writer of run artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::norms::EstimateReport;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Pass/fail summary of one report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckStatus {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub refinement_delta: Option<f64>,
    pub fitted_exponent: Option<f64>,
}

impl CheckStatus {
    pub fn of(r: &EstimateReport) -> Self {
        CheckStatus {
            name: r.name.clone(),
            passed: r.passed,
            cases: r.cases.len(),
            max_ratio: r.max_ratio,
            median_ratio: r.median_ratio,
            refinement_delta: r.refinement_delta,
            fitted_exponent: r.fitted_exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub target: Option<String>,
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub checks: Vec<CheckStatus>,
    /// Named scalars produced by the run besides the report summaries.
    pub scalars: BTreeMap<String, f64>,
    pub passed: bool,
    /// Seconds per stage. Not part of the reproducible payload.
    pub timings: Vec<(String, f64)>,
    /// Every artifact of the run, relative to the run directory.
    pub files: Vec<String>,
}

impl RunManifest {
    /// The manifest without wall-clock timings, as JSON.
    pub fn payload(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("the manifest serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timings");
        }
        v
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(dir.join(MANIFEST))?)?)
    }
}

pub const MANIFEST: &str = "manifest.json";

/// Collects results and writes every artifact of one run directory.
pub struct RunWriter {
    dir: PathBuf,
    manifest: RunManifest,
    started: Instant,
}

impl RunWriter {
    pub fn create(dir: PathBuf, command: &str, target: Option<&str>, config_hash: String, seed: u64) -> Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(RunWriter {
            dir,
            manifest: RunManifest {
                command: command.to_string(),
                target: target.map(str::to_string),
                config_hash,
                code_version: CODE_VERSION.to_string(),
                seed,
                checks: Vec::new(),
                scalars: BTreeMap::new(),
                passed: true,
                timings: Vec::new(),
                files: Vec::new(),
            },
            started: Instant::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Closes a timed stage started at the previous call.
    pub fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.manifest
            .timings
            .push((stage.to_string(), now.duration_since(self.started).as_secs_f64()));
        self.started = now;
    }

    pub fn scalar(&mut self, name: impl Into<String>, value: f64) {
        self.manifest.scalars.insert(name.into(), value);
    }

    pub fn status(&mut self, status: CheckStatus) {
        self.manifest.passed &= status.passed;
        self.manifest.checks.push(status);
    }

    /// Records a path written by someone else, which must lie in the run
    /// directory.
    pub fn track(&mut self, path: &Path) {
        let rel = path.strip_prefix(&self.dir).unwrap_or(path);
        self.manifest.files.push(rel.to_string_lossy().replace('\\', "/"));
    }

    pub fn write_file(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents)?;
        self.track(&path);
        Ok(path)
    }

    /// Appends every report to `reports.jsonl` and one CSV per report.
    pub fn reports(&mut self, reports: &[EstimateReport]) -> Result<()> {
        let mut lines = String::new();
        for r in reports {
            lines.push_str(&r.to_json_lines()?);
            self.write_file(&format!("{}.csv", r.name), r.to_csv().as_bytes())?;
            self.status(CheckStatus::of(r));
        }
        self.write_file("reports.jsonl", lines.as_bytes())?;
        Ok(())
    }

    /// Writes `manifest.json`, which lists itself, and returns the manifest.
    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.files.push(MANIFEST.to_string());
        self.manifest.files.sort();
        self.manifest.files.dedup();
        let text = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(self.dir.join(MANIFEST), text)?;
        Ok(self.manifest)
    }
}
