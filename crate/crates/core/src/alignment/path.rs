use serde::{Deserialize, Serialize};

use super::{log_prob, Posteriorgram};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub symbol: usize,
    pub start_frame: usize,
    /// Exclusive.
    pub end_frame: usize,
    pub mean_posterior: f64,
}

impl Segment {
    pub fn frames(&self) -> usize {
        self.end_frame - self.start_frame
    }
}

/// Per-frame labelling (`None` = blank) with its phone segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentPath {
    pub frame_labels: Vec<Option<usize>>,
    pub segments: Vec<Segment>,
    pub log_score: f64,
}

impl AlignmentPath {
    /// Builds segments from maximal runs of identical non-blank labels and
    /// scores the labelling against `post`.
    pub fn from_labels(frame_labels: Vec<Option<usize>>, post: &Posteriorgram) -> Self {
        let mut segments: Vec<Segment> = Vec::new();
        let mut t = 0;
        while t < frame_labels.len() {
            let label = frame_labels[t];
            let mut end = t + 1;
            while end < frame_labels.len() && frame_labels[end] == label {
                end += 1;
            }
            if let Some(sym) = label {
                let mean = (t..end).map(|f| post.prob(f, Some(sym))).sum::<f64>() / (end - t) as f64;
                segments.push(Segment {
                    symbol: sym,
                    start_frame: t,
                    end_frame: end,
                    mean_posterior: mean,
                });
            }
            t = end;
        }
        let log_score = frame_labels
            .iter()
            .enumerate()
            .map(|(t, &l)| log_prob(post.prob(t, l)))
            .sum();
        Self {
            frame_labels,
            segments,
            log_score,
        }
    }

    pub fn frames(&self) -> usize {
        self.frame_labels.len()
    }

    /// Realized phone sequence under the CTC collapse rule.
    pub fn collapse(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.symbol).collect()
    }

    /// Per-frame phone with blank frames inheriting the preceding segment's
    /// phone (or the following one before the first segment).
    pub fn filled_labels(&self) -> Vec<Option<usize>> {
        fill_blanks(&self.frame_labels)
    }
}

/// Blank frames take the previous phone; leading blanks take the first phone.
pub fn fill_blanks<T: Clone>(labels: &[Option<T>]) -> Vec<Option<T>> {
    let mut current = labels.iter().find_map(|l| l.clone());
    labels
        .iter()
        .map(|l| {
            if l.is_some() {
                current = l.clone();
            }
            current.clone()
        })
        .collect()
}
