//! Versioned analysis reports: the end-to-end pipeline, canonical JSON,
//! SVG alignment maps and the append-only report store.

mod canonical;
mod engine;
mod pipeline;
mod store;
mod svg;

pub use canonical::{canonical_json, from_canonical_json, round_significant, SIGNIFICANT_DIGITS};
pub use engine::ReportEngine;
pub use pipeline::{AnalysisConfig, Analyzer};
pub use store::{reanalyzed, ReportStore, ReportSummary};
pub use svg::{render_alignment_svg, SvgOptions, DEFAULT_PX_PER_S};

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{AlignmentError, PhonemeEditOp};
use crate::classifier::{CalibrationModel, Candidate, DysfluencyEvent, ThresholdError, Thresholds};
use crate::frontend::{FeatureGroup, FrameClock, FrontendConfig, FrontendError};
use crate::temporal::TemporalError;

/// Pipeline stage names reported with analysis failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Audio,
    Transcript,
    Frontend,
    Posteriors,
    CtcAlign,
    EditOps,
    Temporal,
    Classify,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Audio => "audio",
            Stage::Transcript => "transcript",
            Stage::Frontend => "frontend",
            Stage::Posteriors => "posteriors",
            Stage::CtcAlign => "ctc_align",
            Stage::EditOps => "edit_ops",
            Stage::Temporal => "temporal",
            Stage::Classify => "classify",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{stage} stage failed: {source}")]
    Frontend {
        stage: Stage,
        #[source]
        source: FrontendError,
    },
    #[error("{stage} stage failed: {source}")]
    Alignment {
        stage: Stage,
        #[source]
        source: AlignmentError,
    },
    #[error("posteriors stage failed: {0}")]
    Templates(#[source] crate::synth::SynthError),
    #[error("temporal stage failed: {0}")]
    Temporal(#[source] TemporalError),
    #[error("transcript cannot be mapped to the inventory: {0}")]
    TranscriptUnmappable(String),
    #[error("unknown report {0:?}")]
    UnknownReport(String),
    #[error("report {report:?} has no event {event:?}")]
    UnknownEvent { report: String, event: String },
    #[error("report {report:?} is at version {current}, request expected {expected}")]
    StaleVersion { report: String, expected: u64, current: u64 },
    #[error(transparent)]
    Thresholds(#[from] ThresholdError),
    #[error("invalid report: {0}")]
    InvalidReport(String),
    #[error("report JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ReportError {
    /// Pipeline stage that failed, for analysis errors.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            ReportError::Frontend { stage, .. } | ReportError::Alignment { stage, .. } => Some(*stage),
            ReportError::Templates(_) => Some(Stage::Posteriors),
            ReportError::Temporal(_) => Some(Stage::Temporal),
            ReportError::TranscriptUnmappable(_) => Some(Stage::Transcript),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AudioMeta {
    pub path: String,
    pub duration_s: f64,
    pub sample_rate: u32,
}

/// Settings the report was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSnapshot {
    pub frontend: FrontendConfig,
    pub thresholds: Thresholds,
    /// Inventory name.
    pub inventory: String,
    pub calibration: CalibrationModel,
    /// Whether a temporal weight bundle supplied the open-set scores.
    pub neural: bool,
}

/// One phone segment of an alignment, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignedSegment {
    pub symbol: String,
    pub start_s: f64,
    pub end_s: f64,
    pub mean_posterior: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verdict {
    pub event_id: String,
    pub verdict: VerdictKind,
    pub annotator: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub processing_s: f64,
    pub real_time_factor: f64,
}

/// The persisted, versioned unit served to the CLI and HTTP clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub report_id: String,
    pub version: u64,
    pub audio: AudioMeta,
    pub transcript: String,
    pub config: ConfigSnapshot,
    /// Forced alignment to the transcript, after boundary refinement.
    pub alignment: Vec<AlignedSegment>,
    /// Unconstrained decode the edit ops were computed from.
    pub realized: Vec<AlignedSegment>,
    pub edit_ops: Vec<PhonemeEditOp>,
    /// Scored spans before labeling and thresholds.
    pub candidates: Vec<Candidate>,
    /// Candidates recomputed with each feature group neutralized.
    pub occluded_candidates: BTreeMap<FeatureGroup, Vec<Candidate>>,
    pub events: Vec<DysfluencyEvent>,
    pub verdicts: Vec<Verdict>,
    pub timing: Timing,
}

impl AnalysisReport {
    pub fn validate(&self) -> Result<(), ReportError> {
        let bad = |m: String| Err(ReportError::InvalidReport(m));
        if self.version < 1 {
            return bad("version must be at least 1".into());
        }
        let mut ids = HashSet::new();
        for e in &self.events {
            if !ids.insert(e.id.as_str()) {
                return bad(format!("duplicate event id {:?}", e.id));
            }
        }
        if let Some(v) = self.verdicts.iter().find(|v| !ids.contains(v.event_id.as_str())) {
            return bad(format!("verdict references unknown event {:?}", v.event_id));
        }
        Ok(())
    }

    pub fn event(&self, id: &str) -> Option<&DysfluencyEvent> {
        self.events.iter().find(|e| e.id == id)
    }

    /// Most recent verdict per event.
    pub fn latest_verdicts(&self) -> BTreeMap<&str, VerdictKind> {
        self.verdicts.iter().map(|v| (v.event_id.as_str(), v.verdict)).collect()
    }

    /// Phone of the realized segment containing each frame centre, on the
    /// report's own frame grid.
    pub fn realized_frame_labels(&self, frames: usize) -> Vec<Option<String>> {
        let clock = FrameClock::new(&self.config.frontend, self.audio.sample_rate);
        (0..frames)
            .map(|i| {
                let t = clock.center_s(i);
                self.realized
                    .iter()
                    .find(|s| s.start_s <= t && t < s.end_s)
                    .map(|s| s.symbol.clone())
            })
            .collect()
    }

    pub fn to_canonical_json(&self) -> String {
        canonical_json(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let r: AnalysisReport = serde_json::from_str(text)?;
        r.validate()?;
        Ok(r)
    }
}

/// The report as it reads back from its canonical JSON (floats rounded).
pub fn canonicalize(report: &AnalysisReport) -> Result<AnalysisReport, ReportError> {
    Ok(from_canonical_json(&canonical_json(report)?)?)
}
