use serde::{Deserialize, Serialize};

use crate::frontend::FeatureMatrix;

use super::{log_prob, AlignmentError, AlignmentPath, Posteriorgram};

/// Options for the unconstrained realized-phone decoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeOptions {
    /// Frames below this level (dB) are silence and decode as blank.
    pub silence_db: f64,
    /// Log-domain cost of switching phone between consecutive audible frames.
    pub switch_penalty: f64,
    /// Shortest phone segment the decoder may emit inside an audible run.
    pub min_segment_ms: f64,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            silence_db: -60.0,
            switch_penalty: 4.0,
            min_segment_ms: 40.0,
        }
    }
}

/// Decodes what was actually said, without reference to the transcript.
///
/// Silent frames (energy below `silence_db`) are blank; every audible run is
/// decoded independently by Viterbi over the phone symbols with a fixed
/// penalty per phone change and a minimum segment length (runs shorter
/// than the minimum decode as a single segment). Blank is never emitted inside an audible run,
/// so repeated units are separated only by real silence.
pub fn decode_realized(
    post: &Posteriorgram,
    energy: &FeatureMatrix,
    opts: &DecodeOptions,
) -> Result<AlignmentPath, AlignmentError> {
    let col = energy
        .channel_index("energy_db")
        .ok_or_else(|| AlignmentError::MissingChannels("energy_db".into()))?;
    if energy.frames() != post.frames() {
        return Err(AlignmentError::FrameCountMismatch(energy.frames(), post.frames()));
    }
    let frames = post.frames();
    let audible: Vec<bool> = (0..frames)
        .map(|t| energy.data[[t, col]] >= opts.silence_db)
        .collect();

    let mut labels = vec![None; frames];
    let mut t = 0;
    while t < frames {
        if !audible[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < frames && audible[t] {
            t += 1;
        }
        decode_run(post, start, t, opts, &mut labels);
    }
    Ok(AlignmentPath::from_labels(labels, post))
}

fn decode_run(
    post: &Posteriorgram,
    start: usize,
    end: usize,
    opts: &DecodeOptions,
    labels: &mut [Option<usize>],
) {
    let n = post.n_symbols();
    let len = end - start;
    let m = ((opts.min_segment_ms * post.frame_rate() / 1000.0).ceil() as usize).max(1);
    // State s * m + k: symbol s held for k + 1 frames (the last slot means >= m).
    let idx = |s: usize, k: usize| s * m + k;
    let mut score = vec![f64::NEG_INFINITY; n * m];
    for s in 0..n {
        score[idx(s, 0)] = log_prob(post.prob(start, Some(s)));
    }
    let mut next = vec![f64::NEG_INFINITY; n * m];
    let mut back = vec![0usize; len * n * m];
    for i in 1..len {
        let f = start + i;
        // Best completed segment to switch from, and runner-up for the same-symbol case.
        let mut first = (usize::MAX, f64::NEG_INFINITY);
        let mut second = (usize::MAX, f64::NEG_INFINITY);
        for s in 0..n {
            let v = score[idx(s, m - 1)];
            if v > first.1 {
                second = first;
                first = (s, v);
            } else if v > second.1 {
                second = (s, v);
            }
        }
        for s in 0..n {
            let emit = log_prob(post.prob(f, Some(s)));
            let row = i * n * m;
            for k in 1..m {
                next[idx(s, k)] = score[idx(s, k - 1)] + emit;
                back[row + idx(s, k)] = idx(s, k - 1);
            }
            if m > 1 {
                // Holding past the minimum stays in the last slot.
                let hold = score[idx(s, m - 1)];
                if hold >= next[idx(s, m - 1)] - emit {
                    next[idx(s, m - 1)] = hold + emit;
                    back[row + idx(s, m - 1)] = idx(s, m - 1);
                }
            }
            let (from, base) = if first.0 != s { first } else { second };
            let switch = base - opts.switch_penalty;
            let stay = if m == 1 { score[idx(s, 0)] } else { f64::NEG_INFINITY };
            if from != usize::MAX && switch > stay {
                next[idx(s, 0)] = switch + emit;
                back[row + idx(s, 0)] = idx(from, m - 1);
            } else {
                next[idx(s, 0)] = stay + emit;
                back[row + idx(s, 0)] = idx(s, 0);
            }
        }
        std::mem::swap(&mut score, &mut next);
    }
    let done: Vec<f64> = (0..n).map(|s| score[idx(s, m - 1)]).collect();
    let (mut state, best) = argmax(&done);
    state = idx(state, m - 1);
    if best == f64::NEG_INFINITY {
        state = argmax(&score).0;
    }
    for i in (0..len).rev() {
        labels[start + i] = Some(state / m);
        if i > 0 {
            state = back[i * n * m + state];
        }
    }
}

/// First index of the maximum.
fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc })
}
