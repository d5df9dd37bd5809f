use std::collections::BTreeMap;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::frontend::FeatureGroup;
use crate::temporal::{centroid_atypicality, TemporalError, WeightBundle};

use super::{Candidate, Category, CategoryScores, Thresholds};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DysfluencyEvent {
    pub id: String,
    pub category: Category,
    pub start_s: f64,
    pub end_s: f64,
    pub raw_score: f64,
    pub calibrated_confidence: f64,
    /// Indices into the report's edit-op list.
    pub contributing_edit_ops: Vec<usize>,
    /// Candidates merged into this event.
    pub candidates: Vec<usize>,
    /// Score drop when each feature group is neutralized.
    pub attribution: BTreeMap<FeatureGroup, f64>,
    pub severity: String,
}

/// Input to the open-set scorer.
#[derive(Debug, Clone, Copy)]
pub enum OpenSetInput<'a> {
    /// No neural weights: complement of the best canonical score.
    Canonical(&'a CategoryScores),
    /// Fused hidden state pooled over the candidate span.
    Neural {
        pooled: &'a Array1<f64>,
        weights: &'a WeightBundle,
    },
}

pub fn open_set_score(input: OpenSetInput<'_>) -> Result<f64, TemporalError> {
    match input {
        OpenSetInput::Canonical(s) => Ok(1.0 - s.best().1),
        OpenSetInput::Neural { pooled, weights } => centroid_atypicality(pooled, weights),
    }
}

/// Weighted score of `cand` for category `cat`.
///
/// Canonical: `w_canonical * score[cat] + w_open * (1 - atypicality)`.
/// Atypical: `w_canonical * (1 - best canonical) + w_open * atypicality`.
pub fn category_score(cand: &Candidate, cat: Category, th: &Thresholds) -> f64 {
    let (wc, wo) = (th.w_canonical, th.w_open);
    let v = if cat.is_canonical() {
        wc * cand.scores.get(cat) + wo * (1.0 - cand.atypicality)
    } else {
        wc * (1.0 - cand.scores.best().1) + wo * cand.atypicality
    };
    v.clamp(0.0, 1.0)
}

/// Label and weighted score of a candidate, if it is labeled at all.
///
/// Atypical when the open-set weight is non-zero, atypicality reaches
/// `open_set_threshold` and the atypical score is at least the canonical
/// one; otherwise the best canonical category when the canonical weight is
/// non-zero and its score is positive. Sensitivities are not consulted
/// here; they only filter in [`apply_thresholds`].
pub fn label_score(cand: &Candidate, th: &Thresholds) -> Option<(Category, f64)> {
    let (best_cat, best) = cand.scores.best();
    let canonical = category_score(cand, best_cat, th);
    let atypical = category_score(cand, Category::Atypical, th);
    if th.w_open > 0.0 && cand.atypicality >= th.open_set_threshold && atypical >= canonical {
        Some((Category::Atypical, atypical))
    } else if th.w_canonical > 0.0 && best > 0.0 {
        Some((best_cat, canonical))
    } else {
        None
    }
}

/// Labels every candidate and merges overlapping events of the same category
/// (span union, maximum score). Events come out ordered by start time.
pub fn combine_predictions(cands: &[Candidate], th: &Thresholds) -> Vec<DysfluencyEvent> {
    let mut by_cat: BTreeMap<Category, Vec<(usize, f64)>> = BTreeMap::new();
    for (i, c) in cands.iter().enumerate() {
        if let Some((cat, score)) = label_score(c, th) {
            by_cat.entry(cat).or_default().push((i, score));
        }
    }
    let mut events = Vec::new();
    for (cat, mut items) in by_cat {
        items.sort_by(|a, b| {
            cands[a.0]
                .start_s
                .total_cmp(&cands[b.0].start_s)
                .then(a.0.cmp(&b.0))
        });
        let mut current: Option<DysfluencyEvent> = None;
        for (i, score) in items {
            let c = &cands[i];
            match current.as_mut() {
                Some(ev) if c.start_s < ev.end_s => {
                    ev.end_s = ev.end_s.max(c.end_s);
                    ev.raw_score = ev.raw_score.max(score);
                    ev.calibrated_confidence = ev.raw_score;
                    ev.candidates.push(i);
                    ev.contributing_edit_ops.extend(&c.contributing_edit_ops);
                }
                _ => {
                    events.extend(current.take());
                    current = Some(DysfluencyEvent {
                        id: format!("{cat}-{i}"),
                        category: cat,
                        start_s: c.start_s,
                        end_s: c.end_s,
                        raw_score: score,
                        calibrated_confidence: score,
                        contributing_edit_ops: c.contributing_edit_ops.clone(),
                        candidates: vec![i],
                        attribution: BTreeMap::new(),
                        severity: cat.severity().to_string(),
                    });
                }
            }
        }
        events.extend(current);
    }
    for ev in &mut events {
        ev.contributing_edit_ops.sort_unstable();
        ev.contributing_edit_ops.dedup();
        ev.candidates.sort_unstable();
        ev.id = format!("{}-{}", ev.category, ev.candidates[0]);
    }
    events.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then(a.category.cmp(&b.category)));
    events
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub temperature: f64,
}

impl Default for CalibrationModel {
    fn default() -> Self {
        Self { temperature: 1.0 }
    }
}

impl CalibrationModel {
    /// `sigmoid(logit(raw) / T)` with `raw` clamped to `[1e-6, 1 - 1e-6]`.
    pub fn calibrate(&self, raw: f64) -> f64 {
        let p = raw.clamp(1e-6, 1.0 - 1e-6);
        let logit = (p / (1.0 - p)).ln();
        crate::temporal::sigmoid(logit / self.temperature)
    }
}

pub fn calibrate_confidence(events: Vec<DysfluencyEvent>, cal: &CalibrationModel) -> Vec<DysfluencyEvent> {
    events
        .into_iter()
        .map(|mut e| {
            e.calibrated_confidence = cal.calibrate(e.raw_score);
            e
        })
        .collect()
}

/// Temperature minimizing the negative log-likelihood of `labels` under the
/// calibrated scores (golden-section search over `ln T` in `[-4, 4]`).
pub fn fit_temperature(raw: &[f64], labels: &[bool]) -> CalibrationModel {
    if raw.is_empty() || raw.len() != labels.len() {
        return CalibrationModel::default();
    }
    let nll = |log_t: f64| {
        let cal = CalibrationModel { temperature: log_t.exp() };
        raw.iter()
            .zip(labels)
            .map(|(&r, &y)| {
                let p = cal.calibrate(r).clamp(1e-12, 1.0 - 1e-12);
                if y {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum::<f64>()
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-4.0f64, 4.0f64);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    for _ in 0..100 {
        if nll(c) < nll(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    CalibrationModel {
        temperature: ((a + b) / 2.0).exp(),
    }
}

/// Keeps events whose calibrated confidence reaches their category's sensitivity.
pub fn apply_thresholds(events: &[DysfluencyEvent], th: &Thresholds) -> Vec<DysfluencyEvent> {
    events
        .iter()
        .filter(|e| e.calibrated_confidence >= th.sensitivity.get(e.category))
        .cloned()
        .collect()
}

/// Combination, calibration and thresholding in one step.
pub fn classify(cands: &[Candidate], th: &Thresholds, cal: &CalibrationModel) -> Vec<DysfluencyEvent> {
    apply_thresholds(&calibrate_confidence(combine_predictions(cands, th), cal), th)
}

/// Occlusion attribution: `raw_score - rescore(group)` for every group.
pub fn attribute_event(
    ev: &DysfluencyEvent,
    rescore: impl Fn(FeatureGroup) -> f64,
) -> BTreeMap<FeatureGroup, f64> {
    FeatureGroup::ALL
        .into_iter()
        .map(|g| (g, ev.raw_score - rescore(g)))
        .collect()
}

/// Best weighted score for `ev`'s category among `cands` overlapping its span.
pub fn rescore_from_candidates(ev: &DysfluencyEvent, cands: &[Candidate], th: &Thresholds) -> f64 {
    cands
        .iter()
        .filter(|c| c.overlaps(ev.start_s, ev.end_s))
        .map(|c| category_score(c, ev.category, th))
        .fold(0.0, f64::max)
}
