//! The JSON run manifest written next to every set of artifacts.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use slipcurrent_core::io::write_atomic;
use slipcurrent_core::scenario::ScenarioConfig;

use crate::config::canonical;
use crate::error::{CliError, Result};
use crate::suite::{InvariantStatus, Level, Status};

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub cli: &'static str,
    pub core: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            cli: env!("CARGO_PKG_VERSION"),
            core: slipcurrent_core::VERSION,
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub started_unix: f64,
    pub wall_seconds: f64,
    pub phases: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ToleranceEntry {
    pub id: &'static str,
    pub tolerance: Option<f64>,
    pub measured: Option<f64>,
    pub status: Status,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub report: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub passed: bool,
    pub exit_code: i32,
    pub config_path: Option<String>,
    /// Echo of the effective configuration after command-line overrides.
    pub config: Option<ScenarioConfig>,
    pub config_canonical: Option<String>,
    pub seed: u64,
    pub threads: usize,
    pub level: Option<Level>,
    pub versions: Versions,
    pub timing: Timing,
    /// Tolerance against measured value per invariant, grouped by module.
    pub tolerances: BTreeMap<&'static str, Vec<ToleranceEntry>>,
    pub summary: Summary,
    pub invariants: Vec<InvariantStatus>,
    pub failures: Vec<String>,
    pub results: serde_json::Value,
    pub artifacts: Vec<String>,
    /// Directory holding the artifacts, if any were written.
    pub out_dir: Option<String>,
}

/// Collects timings and artifacts while a command runs.
pub struct ManifestBuilder {
    manifest: RunManifest,
    start: Instant,
    phase: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: u64, threads: usize, level: Option<Level>) -> Self {
        let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        Self {
            manifest: RunManifest {
                command: command.into(),
                passed: false,
                exit_code: 1,
                config_path: None,
                config: None,
                config_canonical: None,
                seed,
                threads,
                level,
                versions: Versions::default(),
                timing: Timing { started_unix: started, wall_seconds: 0.0, phases: BTreeMap::new() },
                tolerances: BTreeMap::new(),
                summary: Summary::default(),
                invariants: Vec::new(),
                failures: Vec::new(),
                results: serde_json::Value::Null,
                artifacts: Vec::new(),
                out_dir: None,
            },
            start: Instant::now(),
            phase: Instant::now(),
        }
    }

    pub fn config(&mut self, path: Option<&Path>, config: &ScenarioConfig) -> Result<()> {
        self.manifest.config_path = path.map(|p| p.display().to_string());
        self.manifest.config_canonical = Some(canonical(config)?);
        self.manifest.config = Some(config.clone());
        Ok(())
    }

    /// Time since the previous phase mark, recorded under `name`.
    pub fn phase(&mut self, name: &str) {
        self.manifest.timing.phases.insert(name.into(), self.phase.elapsed().as_secs_f64());
        self.phase = Instant::now();
    }

    pub fn results(&mut self, v: serde_json::Value) {
        self.manifest.results = v;
    }

    pub fn failure(&mut self, msg: String) {
        self.manifest.failures.push(msg);
    }

    /// Writes `bytes` atomically under `dir` and lists the file.
    pub fn artifact(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&dir.join(name), bytes)?;
        self.manifest.artifacts.push(name.into());
        Ok(())
    }

    /// Fills the summary and exit status; `manifest.json` is written last.
    pub fn finish(mut self, invariants: Vec<InvariantStatus>, dir: Option<&Path>) -> Result<RunManifest> {
        let m = &mut self.manifest;
        for s in &invariants {
            match s.status {
                Status::Pass => m.summary.pass += 1,
                Status::Fail => {
                    m.summary.fail += 1;
                    m.failures.push(format!("{}: {}", s.id, s.detail));
                }
                Status::Report => m.summary.report += 1,
                Status::Skipped => m.summary.skipped += 1,
            }
            m.tolerances.entry(s.module).or_default().push(ToleranceEntry {
                id: s.id,
                tolerance: s.tolerance,
                measured: s.measured,
                status: s.status,
            });
        }
        m.invariants = invariants;
        m.passed = m.failures.is_empty();
        m.exit_code = if m.passed { 0 } else { 1 };
        m.timing.wall_seconds = self.start.elapsed().as_secs_f64();
        if let Some(dir) = dir {
            m.out_dir = Some(dir.display().to_string());
            m.artifacts.push("manifest.json".into());
            let json = serde_json::to_string_pretty(&m).map_err(|e| CliError::Serialize { what: "manifest", msg: e.to_string() })?;
            write_atomic(&dir.join("manifest.json"), json.as_bytes())?;
        }
        Ok(self.manifest)
    }
}
