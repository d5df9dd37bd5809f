use std::path::Path;

use crate::classifier::Thresholds;
use crate::frontend::{load_audio, AudioBuffer};

use super::{
    canonicalize, render_alignment_svg, AnalysisReport, Analyzer, ReportError, ReportStore, ReportSummary, Stage,
    SvgOptions, VerdictKind,
};

/// Pipeline plus store: the operations behind the CLI and HTTP surfaces.
#[derive(Debug)]
pub struct ReportEngine {
    analyzer: Analyzer,
    store: ReportStore,
}

impl ReportEngine {
    pub fn new(analyzer: Analyzer, store: ReportStore) -> Self {
        Self { analyzer, store }
    }

    pub fn analyzer(&self) -> &Analyzer {
        &self.analyzer
    }

    pub fn store(&self) -> &ReportStore {
        &self.store
    }

    /// Analyzes a WAV file and persists the report at version 1.
    pub fn analyze_file(&self, path: impl AsRef<Path>, transcript: &str) -> Result<AnalysisReport, ReportError> {
        let path = path.as_ref();
        let audio = load_audio(path).map_err(|source| ReportError::Frontend {
            stage: Stage::Audio,
            source,
        })?;
        self.analyze(&audio, &path.display().to_string(), transcript)
    }

    /// Analyzes decoded audio and persists the report at version 1.
    pub fn analyze(&self, audio: &AudioBuffer, audio_path: &str, transcript: &str) -> Result<AnalysisReport, ReportError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let report = canonicalize(&self.analyzer.analyze(&id, audio, audio_path, transcript)?)?;
        self.store.create(&report)?;
        log::info!("report {id}: {} events", report.events.len());
        Ok(report)
    }

    pub fn get(&self, id: &str) -> Result<AnalysisReport, ReportError> {
        self.store.load(id)
    }

    pub fn list(&self) -> Result<Vec<ReportSummary>, ReportError> {
        self.store.list()
    }

    /// See [`ReportStore::reanalyze`].
    pub fn reanalyze(&self, id: &str, th: &Thresholds, expected: Option<u64>) -> Result<AnalysisReport, ReportError> {
        self.store.reanalyze(id, th, expected)
    }

    /// See [`ReportStore::record_verdict`].
    pub fn record_verdict(
        &self,
        id: &str,
        event_id: &str,
        verdict: VerdictKind,
        annotator: &str,
        expected: Option<u64>,
    ) -> Result<AnalysisReport, ReportError> {
        self.store.record_verdict(id, event_id, verdict, annotator, expected)
    }

    pub fn svg(&self, id: &str) -> Result<String, ReportError> {
        Ok(render_alignment_svg(&self.store.load(id)?, &SvgOptions::default()))
    }
}
