use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::classifier::Thresholds;

use super::pipeline::score_events;
use super::{AnalysisReport, AudioMeta, ReportError, Verdict, VerdictKind};

/// Listing entry for one report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub report_id: String,
    pub version: u64,
    pub audio: AudioMeta,
    pub transcript: String,
    pub event_count: usize,
}

/// Directory of reports, one subdirectory per report holding one canonical
/// JSON file per version (`v000001.json`, ...). Files are never rewritten.
#[derive(Debug)]
pub struct ReportStore {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

fn version_file(v: u64) -> String {
    format!("v{v:06}.json")
}

fn parse_version(name: &str) -> Option<u64> {
    name.strip_prefix('v')?.strip_suffix(".json")?.parse().ok()
}

impl ReportStore {
    /// Opens (creating if needed) a store rooted at `root` and checks that it is writable.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ReportError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        let probe = root.join(format!(".probe-{}", uuid::Uuid::new_v4().simple()));
        fs::write(&probe, b"")?;
        fs::remove_file(&probe)?;
        Ok(Self {
            root,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, id: &str) -> Result<PathBuf, ReportError> {
        if !valid_id(id) {
            return Err(ReportError::UnknownReport(id.to_string()));
        }
        Ok(self.root.join(id))
    }

    fn lock(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(id.to_string()).or_default().clone()
    }

    /// Stored versions of `id`, ascending.
    pub fn versions(&self, id: &str) -> Result<Vec<u64>, ReportError> {
        let dir = self.dir(id)?;
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == ErrorKind::NotFound => return Err(ReportError::UnknownReport(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for entry in entries {
            if let Some(v) = entry?.file_name().to_str().and_then(parse_version) {
                out.push(v);
            }
        }
        if out.is_empty() {
            return Err(ReportError::UnknownReport(id.to_string()));
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn load_version(&self, id: &str, version: u64) -> Result<AnalysisReport, ReportError> {
        let path = self.dir(id)?.join(version_file(version));
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => return Err(ReportError::UnknownReport(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        AnalysisReport::from_json(&text)
    }

    /// Current (newest) version of `id`.
    pub fn load(&self, id: &str) -> Result<AnalysisReport, ReportError> {
        let latest = *self.versions(id)?.last().expect("versions are non-empty");
        self.load_version(id, latest)
    }

    /// Raw canonical JSON of the current version.
    pub fn load_json(&self, id: &str) -> Result<String, ReportError> {
        let latest = *self.versions(id)?.last().expect("versions are non-empty");
        Ok(fs::read_to_string(self.dir(id)?.join(version_file(latest)))?)
    }

    fn write_new(&self, report: &AnalysisReport) -> Result<(), ReportError> {
        report.validate()?;
        let dir = self.dir(&report.report_id)?;
        fs::create_dir_all(&dir)?;
        let path = dir.join(version_file(report.version));
        let mut f = match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                return Err(ReportError::StaleVersion {
                    report: report.report_id.clone(),
                    expected: report.version - 1,
                    current: report.version,
                })
            }
            Err(e) => return Err(e.into()),
        };
        f.write_all(report.to_canonical_json().as_bytes())?;
        f.sync_all()?;
        Ok(())
    }

    /// Persists a new report. Its version must be 1 and its id unused.
    pub fn create(&self, report: &AnalysisReport) -> Result<(), ReportError> {
        if report.version != 1 {
            return Err(ReportError::InvalidReport(format!(
                "new reports start at version 1, got {}",
                report.version
            )));
        }
        let lock = self.lock(&report.report_id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        self.write_new(report)
    }

    /// Applies `f` to the current version and commits the result as the next
    /// version. With `expected` set, fails with `StaleVersion` unless the
    /// current version equals it. Mutations of one report are serialized.
    pub fn update(
        &self,
        id: &str,
        expected: Option<u64>,
        f: impl FnOnce(&AnalysisReport) -> Result<AnalysisReport, ReportError>,
    ) -> Result<AnalysisReport, ReportError> {
        let lock = self.lock(id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let current = self.load(id)?;
        if let Some(exp) = expected {
            if exp != current.version {
                return Err(ReportError::StaleVersion {
                    report: id.to_string(),
                    expected: exp,
                    current: current.version,
                });
            }
        }
        let mut next = f(&current)?;
        next.report_id = current.report_id.clone();
        next.version = current.version + 1;
        let next = super::canonicalize(&next)?;
        self.write_new(&next)?;
        Ok(next)
    }

    /// Re-runs labeling, calibration and thresholds on the stored candidates
    /// and commits the result as the next version.
    ///
    /// Fields of `th` that shape the candidates themselves (`z_prolong`,
    /// `silence_block_ms`, `silence_db`) keep their stored values.
    pub fn reanalyze(&self, id: &str, th: &Thresholds, expected: Option<u64>) -> Result<AnalysisReport, ReportError> {
        th.validate()?;
        self.update(id, expected, |cur| Ok(reanalyzed(cur, th)))
    }

    /// Appends a verdict on one event.
    pub fn record_verdict(
        &self,
        id: &str,
        event_id: &str,
        verdict: VerdictKind,
        annotator: &str,
        expected: Option<u64>,
    ) -> Result<AnalysisReport, ReportError> {
        self.update(id, expected, |cur| {
            if cur.event(event_id).is_none() {
                return Err(ReportError::UnknownEvent {
                    report: id.to_string(),
                    event: event_id.to_string(),
                });
            }
            let mut next = cur.clone();
            next.verdicts.push(Verdict {
                event_id: event_id.to_string(),
                verdict,
                annotator: annotator.to_string(),
                timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            });
            Ok(next)
        })
    }

    /// Summaries of every stored report, ordered by id.
    pub fn list(&self) -> Result<Vec<ReportSummary>, ReportError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let entry = entry?;
            if !entry.file_type()?.is_dir() {
                continue;
            }
            let Some(id) = entry.file_name().to_str().map(str::to_string) else {
                continue;
            };
            if !valid_id(&id) {
                continue;
            }
            match self.load(&id) {
                Ok(r) => out.push(ReportSummary {
                    report_id: r.report_id,
                    version: r.version,
                    audio: r.audio,
                    transcript: r.transcript,
                    event_count: r.events.len(),
                }),
                Err(ReportError::UnknownReport(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        out.sort_by(|a, b| a.report_id.cmp(&b.report_id));
        Ok(out)
    }
}

/// `cur` with events recomputed under `th`; alignment and edit ops untouched,
/// verdicts kept for events that survive.
pub fn reanalyzed(cur: &AnalysisReport, th: &Thresholds) -> AnalysisReport {
    let stored = &cur.config.thresholds;
    let th = Thresholds {
        z_prolong: stored.z_prolong,
        silence_block_ms: stored.silence_block_ms,
        silence_db: stored.silence_db,
        ..th.clone()
    };
    let mut next = cur.clone();
    next.events = score_events(&cur.candidates, &cur.occluded_candidates, &th, &cur.config.calibration);
    next.verdicts.retain(|v| next.events.iter().any(|e| e.id == v.event_id));
    next.config.thresholds = th;
    next
}
