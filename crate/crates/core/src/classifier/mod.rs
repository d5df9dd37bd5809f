//! Turns edit ops and energy into typed dysfluency events: rule-based
//! canonical scores, an open-set atypicality score, their weighted
//! combination, temperature calibration, occlusion attribution and the
//! sensitivity filter.

mod canonical;
mod category;
mod combine;
mod thresholds;

pub use canonical::{canonical_scores, silence_runs, ScoringContext, LOW_POSTERIOR};
pub use category::{Category, CategoryScores};
pub use combine::{
    apply_thresholds, attribute_event, calibrate_confidence, classify, combine_predictions,
    category_score, fit_temperature, label_score, open_set_score, rescore_from_candidates, CalibrationModel,
    DysfluencyEvent, OpenSetInput,
};
pub use thresholds::{Sensitivity, ThresholdError, Thresholds};

use serde::{Deserialize, Serialize};

/// A scored span that may become an event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub start_frame: usize,
    /// Exclusive.
    pub end_frame: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub scores: CategoryScores,
    /// Open-set atypicality in `[0, 1]`.
    pub atypicality: f64,
    /// Indices into the edit-op list the candidate was built from.
    pub contributing_edit_ops: Vec<usize>,
}

impl Candidate {
    pub fn overlaps(&self, start_s: f64, end_s: f64) -> bool {
        self.start_s < end_s && start_s < self.end_s
    }
}
