//! Detection, alignment, agreement and speed metrics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{fill_blanks, AlignmentPath};
use crate::classifier::{Category, DysfluencyEvent};

/// Minimum temporal IoU for a predicted event to match a gold event.
pub const MATCH_IOU: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("label sequences differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("label sequences are empty")]
    Empty,
    #[error("frame count mismatch: prediction has {0} frames, gold has {1}")]
    FrameCountMismatch(usize, usize),
    #[error("audio duration must be positive")]
    ZeroDuration,
}

/// A labelled time span, the unit of detection scoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSpan {
    pub category: Category,
    pub start_s: f64,
    pub end_s: f64,
}

impl EventSpan {
    pub fn iou(&self, other: &EventSpan) -> f64 {
        let inter = (self.end_s.min(other.end_s) - self.start_s.max(other.start_s)).max(0.0);
        let union = (self.end_s - self.start_s) + (other.end_s - other.start_s) - inter;
        if union > 0.0 {
            inter / union
        } else {
            0.0
        }
    }
}

impl From<&DysfluencyEvent> for EventSpan {
    fn from(ev: &DysfluencyEvent) -> Self {
        Self {
            category: ev.category,
            start_s: ev.start_s,
            end_s: ev.end_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub balanced_accuracy: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl DetectionMetrics {
    /// Metrics from raw counts. No predictions gives precision 1, no gold
    /// events gives recall 1.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            precision,
            recall,
            f1: harmonic(precision, recall),
            balanced_accuracy: recall,
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
        }
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Greedy one-to-one matching by descending IoU; returns `(pred, gold)` index pairs.
///
/// Only same-category pairs with IoU >= [`MATCH_IOU`] are eligible. Equal
/// IoUs are taken earliest start first; the ordering key is symmetric in
/// the two events so swapping `pred` and `gold` yields the same pairs.
pub fn match_events(pred: &[EventSpan], gold: &[EventSpan]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gold.iter().enumerate() {
            if p.category == g.category {
                let iou = p.iou(g);
                if iou >= MATCH_IOU {
                    pairs.push((iou, i, j));
                }
            }
        }
    }
    let key = |&(iou, i, j): &(f64, usize, usize)| {
        let (a, b) = (&pred[i], &gold[j]);
        (
            -iou,
            a.start_s.min(b.start_s),
            a.start_s.max(b.start_s),
            a.end_s.min(b.end_s),
            a.end_s.max(b.end_s),
        )
    };
    pairs.sort_by(|x, y| {
        let (kx, ky) = (key(x), key(y));
        kx.0.total_cmp(&ky.0)
            .then(kx.1.total_cmp(&ky.1))
            .then(kx.2.total_cmp(&ky.2))
            .then(kx.3.total_cmp(&ky.3))
            .then(kx.4.total_cmp(&ky.4))
    });
    let mut used_p = vec![false; pred.len()];
    let mut used_g = vec![false; gold.len()];
    let mut out = Vec::new();
    for (_, i, j) in pairs {
        if !used_p[i] && !used_g[j] {
            used_p[i] = true;
            used_g[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Precision, recall, F1 and balanced accuracy of `pred` against `gold`.
///
/// With no gold events recall and balanced accuracy are 1; with no
/// predictions precision is 1. Balanced accuracy averages per-category
/// recall over the categories present in `gold`.
pub fn evaluate_detection(pred: &[EventSpan], gold: &[EventSpan]) -> DetectionMetrics {
    let matches = match_events(pred, gold);
    let tp = matches.len();
    let mut m = DetectionMetrics::from_counts(tp, pred.len() - tp, gold.len() - tp);

    let mut per_cat: BTreeMap<Category, (usize, usize)> = BTreeMap::new();
    for g in gold {
        per_cat.entry(g.category).or_default().1 += 1;
    }
    for &(_, j) in &matches {
        per_cat.entry(gold[j].category).or_default().0 += 1;
    }
    if !per_cat.is_empty() {
        m.balanced_accuracy =
            per_cat.values().map(|&(hit, n)| hit as f64 / n as f64).sum::<f64>() / per_cat.len() as f64;
    }
    m
}

/// Percentage of frames whose predicted phone differs from `gold`.
///
/// Predicted blank frames take the preceding segment's phone.
pub fn alignment_error_rate(pred: &AlignmentPath, gold: &[usize]) -> Result<f64, EvalError> {
    if pred.frames() != gold.len() {
        return Err(EvalError::FrameCountMismatch(pred.frames(), gold.len()));
    }
    label_error_rate(&pred.frame_labels, gold)
}

/// Percentage of frames whose label differs from `gold` after blank frames
/// in `pred` inherit the preceding label.
pub fn label_error_rate<T: PartialEq + Clone>(pred: &[Option<T>], gold: &[T]) -> Result<f64, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::FrameCountMismatch(pred.len(), gold.len()));
    }
    if gold.is_empty() {
        return Ok(0.0);
    }
    let wrong = fill_blanks(pred)
        .iter()
        .zip(gold)
        .filter(|(p, g)| p.as_ref() != Some(*g))
        .count();
    Ok(100.0 * wrong as f64 / gold.len() as f64)
}

/// Cohen's kappa between two raters. Returns 1 when chance agreement is 1.
pub fn cohens_kappa<T: Eq + Hash + Ord>(a: &[T], b: &[T]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = a.len() as f64;
    let p_o = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let mut ca: HashMap<&T, usize> = HashMap::new();
    let mut cb: HashMap<&T, usize> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
    }
    let labels: BTreeSet<&T> = ca.keys().chain(cb.keys()).copied().collect();
    let p_e: f64 = labels
        .iter()
        .map(|l| {
            let fa = ca.get(l).copied().unwrap_or(0) as f64 / n;
            let fb = cb.get(l).copied().unwrap_or(0) as f64 / n;
            fa * fb
        })
        .sum();
    if (1.0 - p_e).abs() < 1e-12 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

pub fn real_time_factor(processing_s: f64, audio_s: f64) -> Result<f64, EvalError> {
    if !(audio_s > 0.0) {
        return Err(EvalError::ZeroDuration);
    }
    Ok(processing_s / audio_s)
}

/// Aggregate evaluation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub balanced_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub aer_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rtf: Option<f64>,
    /// Clinician-rated interpretability, carried through when supplied.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub interpretability_score: Option<f64>,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl From<DetectionMetrics> for MetricsReport {
    fn from(d: DetectionMetrics) -> Self {
        Self {
            precision: d.precision,
            recall: d.recall,
            f1: d.f1,
            balanced_accuracy: d.balanced_accuracy,
            aer_percent: None,
            kappa: None,
            rtf: None,
            interpretability_score: None,
            true_positives: d.true_positives,
            false_positives: d.false_positives,
            false_negatives: d.false_negatives,
        }
    }
}
