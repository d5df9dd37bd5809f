use super::{AlignmentError, AlignmentPath, ExpectedTranscript, Posteriorgram};

/// Log-probability used for zero posteriors; finite so that zero-probability
/// paths still rank by how many impossible frames they contain.
pub const LOG_ZERO: f64 = -1e30;

/// Log-scores closer than this compare equal, so that mathematically tied
/// paths are not split by floating-point summation order.
pub const TIE_EPS: f64 = 1e-9;

pub fn log_prob(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        LOG_ZERO
    }
}

/// Minimum frames needed to realize `phones` under CTC: one per phone plus a
/// separating blank between identical neighbours.
pub fn ctc_min_frames(phones: &[usize]) -> usize {
    phones.len() + phones.windows(2).filter(|w| w[0] == w[1]).count()
}

/// Viterbi forced alignment through the blank-interleaved CTC state graph.
///
/// State `2k + 1` emits `t.phones[k]`, even states emit blank. A state is
/// entered by staying, advancing one state, or skipping a blank between two
/// different phones. On equal scores (within [`TIE_EPS`]) the path stays in the current state, so
/// transitions happen as early as possible; at the last frame the trailing
/// blank is preferred over the final phone.
pub fn ctc_forced_align(
    post: &Posteriorgram,
    t: &ExpectedTranscript,
) -> Result<AlignmentPath, AlignmentError> {
    if t.is_empty() {
        return Err(AlignmentError::EmptyTranscript);
    }
    if let Some(&bad) = t.phones.iter().find(|&&p| p >= post.n_symbols()) {
        return Err(AlignmentError::UnknownPhone(format!("#{bad}")));
    }
    let frames = post.frames();
    let required = ctc_min_frames(&t.phones);
    if frames < required {
        return Err(AlignmentError::InfeasibleLength { frames, required });
    }

    let n_states = 2 * t.len() + 1;
    let label = |s: usize| -> Option<usize> {
        if s.is_multiple_of(2) {
            None
        } else {
            Some(t.phones[s / 2])
        }
    };
    let can_skip = |s: usize| s % 2 == 1 && s >= 3 && t.phones[s / 2] != t.phones[s / 2 - 1];

    let mut prev = vec![f64::NEG_INFINITY; n_states];
    let mut curr = vec![f64::NEG_INFINITY; n_states];
    // Backpointer: how many states were advanced to reach (frame, state).
    let mut back = vec![0u8; frames * n_states];

    prev[0] = log_prob(post.prob(0, None));
    prev[1] = log_prob(post.prob(0, label(1)));
    for f in 1..frames {
        for s in 0..n_states {
            let mut best = prev[s];
            let mut step = 0u8;
            if s >= 1 && prev[s - 1] > best + TIE_EPS {
                best = prev[s - 1];
                step = 1;
            }
            if can_skip(s) && prev[s - 2] > best + TIE_EPS {
                best = prev[s - 2];
                step = 2;
            }
            curr[s] = if best == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                best + log_prob(post.prob(f, label(s)))
            };
            back[f * n_states + s] = step;
        }
        std::mem::swap(&mut prev, &mut curr);
    }

    let mut s = if prev[n_states - 2] <= prev[n_states - 1] + TIE_EPS {
        n_states - 1
    } else {
        n_states - 2
    };
    let mut states = vec![0usize; frames];
    states[frames - 1] = s;
    for f in (1..frames).rev() {
        s -= back[f * n_states + s] as usize;
        states[f - 1] = s;
    }
    let labels = states.into_iter().map(label).collect();
    Ok(AlignmentPath::from_labels(labels, post))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::PhonemeInventory;
    use ndarray::Array2;

    fn inv_ab() -> PhonemeInventory {
        PhonemeInventory::from_json(
            r#"{"name":"ab","blank_index":0,"symbols":[
                {"symbol":"a","mean_ms":100,"std_ms":20},
                {"symbol":"b","mean_ms":100,"std_ms":20}]}"#,
        )
        .unwrap()
    }

    fn one_hot(cols: &[usize], width: usize) -> Posteriorgram {
        let probs = Array2::from_shape_fn((cols.len(), width), |(r, c)| (cols[r] == c) as u8 as f64);
        Posteriorgram::new(probs, 62.5, 0).unwrap()
    }

    #[test]
    fn one_hot_forces_segments() {
        let inv = inv_ab();
        let post = one_hot(&[1, 1, 2, 2], 3);
        let t = ExpectedTranscript::parse("a-b", &inv).unwrap();
        let path = ctc_forced_align(&post, &t).unwrap();
        let spans: Vec<_> = path
            .segments
            .iter()
            .map(|s| (s.symbol, s.start_frame, s.end_frame))
            .collect();
        assert_eq!(spans, vec![(0, 0, 2), (1, 2, 4)]);
        assert_eq!(path.log_score, 0.0);
    }

    #[test]
    fn repeated_label_needs_blank() {
        let inv = inv_ab();
        let t = ExpectedTranscript::parse("a-a", &inv).unwrap();
        assert_eq!(ctc_min_frames(&t.phones), 3);
        let post = one_hot(&[1, 1], 3);
        assert!(matches!(
            ctc_forced_align(&post, &t),
            Err(AlignmentError::InfeasibleLength { frames: 2, required: 3 })
        ));
        let post = one_hot(&[1, 0, 1], 3);
        let path = ctc_forced_align(&post, &t).unwrap();
        assert_eq!(path.collapse(), vec![0, 0]);
        assert_eq!(path.log_score, 0.0);
    }

    #[test]
    fn ties_transition_early() {
        let inv = inv_ab();
        let post = Posteriorgram::new(Array2::from_elem((3, 3), 1.0 / 3.0), 62.5, 0).unwrap();
        let t = ExpectedTranscript::parse("a", &inv).unwrap();
        let path = ctc_forced_align(&post, &t).unwrap();
        assert_eq!(path.frame_labels, vec![Some(0), None, None]);
    }
}
