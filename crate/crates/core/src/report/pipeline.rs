use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::alignment::{
    classify_edit_ops, ctc_forced_align, decode_realized, phoneme_posteriors, refine_alignment,
    AlignmentPath, DecodeOptions, EditOpConfig, EncoderSource, ExpectedTranscript, PhonemeEditOp, PhonemeInventory,
    Posteriorgram, TemplateSet, DEFAULT_REFINE_WINDOW,
};
use crate::classifier::{
    attribute_event, canonical_scores, classify, rescore_from_candidates, CalibrationModel, Candidate,
    DysfluencyEvent, ScoringContext, Thresholds,
};
use crate::frontend::{extract_features, AudioBuffer, FeatureGroup, FeatureMatrix, FrameClock, FrontendConfig};
use crate::synth::{synthetic_templates, VoiceMap, DEFAULT_TEMPLATE_TEMPERATURE};
use crate::temporal::{HiddenSeq, TemporalError, TemporalModel, WeightBundle};

use super::{AlignedSegment, AnalysisReport, AudioMeta, ConfigSnapshot, ReportError, Stage, Timing};

/// Everything that parameterizes an analysis. Serialized as JSON with these
/// field names; missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub frontend: FrontendConfig,
    pub thresholds: Thresholds,
    pub calibration: CalibrationModel,
    pub decode: DecodeOptions,
    /// Softmax temperature of the template encoder.
    pub template_temperature: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            frontend: FrontendConfig::default(),
            thresholds: Thresholds::default(),
            calibration: CalibrationModel::default(),
            decode: DecodeOptions::default(),
            template_temperature: DEFAULT_TEMPLATE_TEMPERATURE,
        }
    }
}

/// Runs the full pipeline for one inventory and configuration.
#[derive(Debug)]
pub struct Analyzer {
    inventory: PhonemeInventory,
    config: AnalysisConfig,
    external_posteriors: Option<PathBuf>,
    model: Option<TemporalModel>,
    templates: Mutex<HashMap<u32, TemplateSet>>,
}

/// Output of the stages that depend on the feature values.
struct Scored {
    realized: AlignmentPath,
    ops: Vec<PhonemeEditOp>,
    candidates: Vec<Candidate>,
}

impl Analyzer {
    pub fn new(inventory: PhonemeInventory, config: AnalysisConfig) -> Self {
        Self {
            inventory,
            config,
            external_posteriors: None,
            model: None,
            templates: Mutex::new(HashMap::new()),
        }
    }

    /// Scores open-set atypicality with the temporal stack instead of the
    /// canonical complement.
    pub fn with_weights(mut self, weights: &WeightBundle) -> Result<Self, TemporalError> {
        self.model = Some(TemporalModel::new(weights)?);
        Ok(self)
    }

    /// Reads posteriors from a matrix file instead of the template encoder.
    pub fn with_external_posteriors(mut self, path: impl Into<PathBuf>) -> Self {
        self.external_posteriors = Some(path.into());
        self
    }

    pub fn inventory(&self) -> &PhonemeInventory {
        &self.inventory
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.config.thresholds
    }

    /// Replaces the thresholds used by later analyses.
    pub fn set_thresholds(&mut self, th: Thresholds) {
        self.config.thresholds = th;
    }

    fn encoder(&self, sample_rate: u32) -> Result<EncoderSource, ReportError> {
        if let Some(p) = &self.external_posteriors {
            return Ok(EncoderSource::External(p.clone()));
        }
        let mut cache = self.templates.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(set) = cache.get(&sample_rate) {
            return Ok(EncoderSource::Templates(set.clone()));
        }
        let voices = VoiceMap::for_inventory(&self.inventory);
        let mut set = synthetic_templates(&self.inventory, &voices, &self.config.frontend, sample_rate)
            .map_err(ReportError::Templates)?;
        set.temperature = self.config.template_temperature;
        cache.insert(sample_rate, set.clone());
        Ok(EncoderSource::Templates(set))
    }

    /// Analyzes `audio` against `transcript` and returns the report at version 1.
    pub fn analyze(
        &self,
        report_id: &str,
        audio: &AudioBuffer,
        audio_path: &str,
        transcript: &str,
    ) -> Result<AnalysisReport, ReportError> {
        let started = Instant::now();
        let cfg = &self.config;
        let th = &cfg.thresholds;
        let inv = &self.inventory;
        let t = ExpectedTranscript::parse(transcript, inv)
            .map_err(|e| ReportError::TranscriptUnmappable(e.to_string()))?;
        let frontend = |source| ReportError::Frontend {
            stage: Stage::Frontend,
            source,
        };
        cfg.frontend.validate(audio.sample_rate()).map_err(frontend)?;
        let stack = extract_features(audio, &cfg.frontend).map_err(frontend)?;
        let clock = FrameClock::new(&cfg.frontend, audio.sample_rate());
        let encoder = self.encoder(audio.sample_rate())?;
        let posteriors = |features: &FeatureMatrix| {
            phoneme_posteriors(features, inv, &encoder).map_err(|source| ReportError::Alignment {
                stage: Stage::Posteriors,
                source,
            })
        };
        let post = posteriors(&stack.combined)?;
        let forced = ctc_forced_align(&post, &t).map_err(|source| ReportError::Alignment {
            stage: Stage::CtcAlign,
            source,
        })?;
        let refined = refine_alignment(&forced, &post, DEFAULT_REFINE_WINDOW);

        let main = self.score(&stack.combined, &post, &t, &clock)?;
        let mut occluded = BTreeMap::new();
        for g in FeatureGroup::ALL {
            let features = stack.combined.neutralized(g);
            let post_g = match &encoder {
                EncoderSource::External(_) => post.clone(),
                EncoderSource::Templates(_) => posteriors(&features)?,
            };
            occluded.insert(g, self.score(&features, &post_g, &t, &clock)?.candidates);
        }
        let processing_s = started.elapsed().as_secs_f64();
        let duration_s = audio.duration_s();
        let report = AnalysisReport {
            report_id: report_id.to_string(),
            version: 1,
            audio: AudioMeta {
                path: audio_path.to_string(),
                duration_s,
                sample_rate: audio.sample_rate(),
            },
            transcript: transcript.to_string(),
            config: ConfigSnapshot {
                frontend: cfg.frontend.clone(),
                thresholds: th.clone(),
                inventory: inv.name().to_string(),
                calibration: cfg.calibration,
                neural: self.model.is_some(),
            },
            alignment: segments(&refined, inv, &clock),
            realized: segments(&main.realized, inv, &clock),
            edit_ops: main.ops,
            candidates: main.candidates,
            occluded_candidates: occluded,
            events: Vec::new(),
            verdicts: Vec::new(),
            timing: Timing {
                processing_s,
                real_time_factor: if duration_s > 0.0 { processing_s / duration_s } else { 0.0 },
            },
        };
        // events come from the rounded candidates so a later reanalysis reproduces them
        let base = super::canonicalize(&report)?;
        let th = base.config.thresholds.clone();
        super::canonicalize(&super::reanalyzed(&base, &th))
    }

    fn score(
        &self,
        features: &FeatureMatrix,
        post: &Posteriorgram,
        t: &ExpectedTranscript,
        clock: &FrameClock,
    ) -> Result<Scored, ReportError> {
        let th = &self.config.thresholds;
        let opts = DecodeOptions {
            silence_db: th.silence_db,
            ..self.config.decode
        };
        let realized = decode_realized(post, features, &opts).map_err(|source| ReportError::Alignment {
            stage: Stage::EditOps,
            source,
        })?;
        let ops = classify_edit_ops(
            &realized,
            t,
            &self.inventory,
            &EditOpConfig {
                frame_ms: clock.frame_ms(),
                z_prolong: th.z_prolong,
            },
        );
        let ctx = ScoringContext {
            ops: &ops,
            transcript: t,
            inventory: &self.inventory,
            energy: features,
            clock,
        };
        let mut candidates = canonical_scores(&ctx, th);
        if let Some(model) = self.model.as_ref().filter(|_| !candidates.is_empty()) {
            let hidden = model.run(&features.data).map_err(ReportError::Temporal)?;
            neural_atypicality(&mut candidates, &hidden.fused, model)?;
        }
        Ok(Scored {
            realized,
            ops,
            candidates,
        })
    }
}

fn neural_atypicality(cands: &mut [Candidate], fused: &HiddenSeq, model: &TemporalModel) -> Result<(), ReportError> {
    for c in cands {
        let pooled = fused.pool(c.start_frame, c.end_frame);
        c.atypicality = model.open_set().atypicality(&pooled).map_err(ReportError::Temporal)?;
    }
    Ok(())
}

/// Labels, calibrates and filters `cands`, then attributes every surviving
/// event by the score drop under each occluded candidate set.
pub(crate) fn score_events(
    cands: &[Candidate],
    occluded: &BTreeMap<FeatureGroup, Vec<Candidate>>,
    th: &Thresholds,
    cal: &CalibrationModel,
) -> Vec<DysfluencyEvent> {
    let mut events = classify(cands, th, cal);
    for ev in &mut events {
        ev.attribution = attribute_event(ev, |g| {
            occluded
                .get(&g)
                .map_or(ev.raw_score, |c| rescore_from_candidates(ev, c, th))
        });
    }
    events
}

fn segments(path: &AlignmentPath, inv: &PhonemeInventory, clock: &FrameClock) -> Vec<AlignedSegment> {
    path.segments
        .iter()
        .map(|s| {
            let (start_s, end_s) = clock.span_s(s.start_frame, s.end_frame);
            AlignedSegment {
                symbol: inv.symbol(s.symbol).to_string(),
                start_s,
                end_s,
                mean_posterior: s.mean_posterior,
            }
        })
        .collect()
}
