use serde::{Deserialize, Serialize};

use super::{AlignmentPath, ExpectedTranscript, PhonemeInventory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Insertion,
    Deletion,
    Substitution,
    Prolongation,
}

/// One phoneme-level deviation between realized and expected speech.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhonemeEditOp {
    pub kind: EditKind,
    pub expected_symbol: Option<String>,
    pub realized_symbol: Option<String>,
    /// Frame span `[start, end)` of the realized segment; empty for deletions.
    pub frame_span: (usize, usize),
    pub duration_z: f64,
    /// Position in the expected transcript. Insertions point at the expected
    /// phone they precede (`len` when trailing).
    pub expected_index: usize,
    /// Index of the realized segment, if any.
    pub realized_index: Option<usize>,
    /// Mean posterior of the realized segment, if any.
    pub mean_posterior: Option<f64>,
}

/// One column of a Levenshtein alignment, in forward order. Indices refer to
/// the realized (`r`) and expected (`e`) sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditStep {
    Match { r: usize, e: usize },
    Substitute { r: usize, e: usize },
    /// Realized `r` has no counterpart; it precedes expected position `e`.
    Insert { r: usize, e: usize },
    /// Expected `e` is missing; `r` realized phones precede the gap.
    Delete { r: usize, e: usize },
}

/// Unit-cost Levenshtein alignment.
///
/// Among alignments with the minimal number of edits, the one with the
/// fewest insertion and deletion runs wins, so repeated material stays one
/// contiguous block. Remaining ties are broken during the backtrace (run from
/// the end) in favour of the diagonal, which places extra realized phones as
/// early as possible: in `b b o l` against `b o l` the first `b` is the
/// insertion.
pub fn levenshtein_ops(realized: &[usize], expected: &[usize]) -> Vec<EditStep> {
    // Costs are (edits, gap runs), compared lexicographically.
    type Cost = (u32, u32);
    const INF: Cost = (u32::MAX / 2, u32::MAX / 2);
    fn add(c: Cost, d: Cost) -> Cost {
        (c.0 + d.0, c.1 + d.1)
    }
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Diag,
        Ins,
        Del,
    }

    let (m, n) = (realized.len(), expected.len());
    let w = n + 1;
    let idx = |i: usize, j: usize| i * w + j;
    let mut diag = vec![INF; (m + 1) * w];
    let mut ins = vec![INF; (m + 1) * w];
    let mut del = vec![INF; (m + 1) * w];
    diag[0] = (0, 0);
    for i in 1..=m {
        ins[idx(i, 0)] = (i as u32, 1);
    }
    for j in 1..=n {
        del[idx(0, j)] = (j as u32, 1);
    }
    for i in 0..=m {
        for j in 0..=n {
            if i == 0 || j == 0 {
                continue;
            }
            {
                let k = idx(i - 1, j - 1);
                let best = diag[k].min(ins[k]).min(del[k]);
                diag[idx(i, j)] = add(best, (u32::from(realized[i - 1] != expected[j - 1]), 0));
            }
            {
                let k = idx(i - 1, j);
                ins[idx(i, j)] = add(diag[k], (1, 1)).min(add(ins[k], (1, 0))).min(add(del[k], (1, 1)));
            }
            {
                let k = idx(i, j - 1);
                del[idx(i, j)] = add(diag[k], (1, 1)).min(add(del[k], (1, 0))).min(add(ins[k], (1, 1)));
            }
        }
    }

    let cost = |s: State, i: usize, j: usize| match s {
        State::Diag => diag[idx(i, j)],
        State::Ins => ins[idx(i, j)],
        State::Del => del[idx(i, j)],
    };
    // Picks the preferred state among those achieving `target` once `step` is added.
    let pick = |i: usize, j: usize, target: Cost, step: &dyn Fn(State) -> Cost| -> State {
        [State::Diag, State::Ins, State::Del]
            .into_iter()
            .find(|&s| add(cost(s, i, j), step(s)) == target)
            .expect("backtrace follows an optimal predecessor")
    };

    let end_cost = cost(State::Diag, m, n).min(cost(State::Ins, m, n)).min(cost(State::Del, m, n));
    let mut state = pick(m, n, end_cost, &|_| (0, 0));
    let (mut i, mut j) = (m, n);
    let mut steps = Vec::with_capacity(m.max(n));
    while i > 0 || j > 0 {
        let here = cost(state, i, j);
        match state {
            State::Diag => {
                let same = realized[i - 1] == expected[j - 1];
                steps.push(if same {
                    EditStep::Match { r: i - 1, e: j - 1 }
                } else {
                    EditStep::Substitute { r: i - 1, e: j - 1 }
                });
                let step = (u32::from(!same), 0);
                i -= 1;
                j -= 1;
                if i > 0 || j > 0 {
                    state = pick(i, j, here, &|_| step);
                }
            }
            State::Ins => {
                steps.push(EditStep::Insert { r: i - 1, e: j });
                i -= 1;
                if i > 0 || j > 0 {
                    state = pick(i, j, here, &|s| if s == State::Ins { (1, 0) } else { (1, 1) });
                }
            }
            State::Del => {
                steps.push(EditStep::Delete { r: i, e: j - 1 });
                j -= 1;
                if i > 0 || j > 0 {
                    state = pick(i, j, here, &|s| if s == State::Del { (1, 0) } else { (1, 1) });
                }
            }
        }
    }
    steps.reverse();
    steps
}

/// Slides each insertion run rightwards over equal-cost placements until
/// its last phone is followed by a pause.
///
/// A run `[a, b)` followed by `Match { r: b }` with `realized[b] ==
/// realized[a]` can be shifted one place without changing the cost. The
/// earliest placement whose last inserted phone satisfies `pause_after` is
/// kept; if none does, the run stays where it was.
pub fn settle_insertions(steps: &mut [EditStep], realized: &[usize], pause_after: impl Fn(usize) -> bool) {
    let mut i = 0;
    while i < steps.len() {
        let EditStep::Insert { r: a0, e: e0 } = steps[i] else {
            i += 1;
            continue;
        };
        let mut len = 0;
        while i + len < steps.len() && matches!(steps[i + len], EditStep::Insert { .. }) {
            len += 1;
        }
        let mut shift = 0;
        let mut target = None;
        loop {
            let a = a0 + shift;
            if pause_after(a + len - 1) {
                target = Some(shift);
                break;
            }
            match steps.get(i + len + shift) {
                Some(&EditStep::Match { r, .. }) if r == a + len && realized[r] == realized[a] => shift += 1,
                _ => break,
            }
        }
        let k = target.unwrap_or(0);
        for m in 0..k {
            steps[i + m] = EditStep::Match { r: a0 + m, e: e0 + m };
        }
        if k > 0 {
            for m in 0..len {
                steps[i + k + m] = EditStep::Insert { r: a0 + k + m, e: e0 + k };
            }
        }
        i += len + k;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EditOpConfig {
    /// Duration of one frame in milliseconds.
    pub frame_ms: f64,
    /// Matched phones with a duration z-score above this are prolongations.
    pub z_prolong: f64,
}

/// Compares the realized phones of `aligned` against the transcript.
///
/// Emits insertion, deletion and substitution ops from [`levenshtein_ops`],
/// plus a prolongation op for every matched phone whose duration z-score
/// exceeds `z_prolong`. Ops come out in alignment order.
pub fn classify_edit_ops(
    aligned: &AlignmentPath,
    t: &ExpectedTranscript,
    inv: &PhonemeInventory,
    cfg: &EditOpConfig,
) -> Vec<PhonemeEditOp> {
    let realized = aligned.collapse();
    let segs = &aligned.segments;
    let sym = |s: usize| Some(inv.symbol(s).to_string());
    let z_of = |r: usize| {
        let seg = &segs[r];
        inv.duration_z(seg.symbol, seg.frames() as f64 * cfg.frame_ms)
    };
    let realized_op = |kind, r: usize, e: usize, expected: Option<String>| PhonemeEditOp {
        kind,
        expected_symbol: expected,
        realized_symbol: sym(segs[r].symbol),
        frame_span: (segs[r].start_frame, segs[r].end_frame),
        duration_z: z_of(r),
        expected_index: e,
        realized_index: Some(r),
        mean_posterior: Some(segs[r].mean_posterior),
    };

    let mut steps = levenshtein_ops(&realized, &t.phones);
    settle_insertions(&mut steps, &realized, |r| {
        r + 1 >= segs.len() || segs[r].end_frame < segs[r + 1].start_frame
    });

    let mut ops = Vec::new();
    for step in steps {
        match step {
            EditStep::Match { r, e } => {
                if z_of(r) > cfg.z_prolong {
                    ops.push(realized_op(EditKind::Prolongation, r, e, sym(t.phones[e])));
                }
            }
            EditStep::Substitute { r, e } => {
                ops.push(realized_op(EditKind::Substitution, r, e, sym(t.phones[e])));
            }
            EditStep::Insert { r, e } => {
                ops.push(realized_op(EditKind::Insertion, r, e, None));
            }
            EditStep::Delete { r, e } => {
                let anchor = if r == 0 { 0 } else { segs[r - 1].end_frame };
                ops.push(PhonemeEditOp {
                    kind: EditKind::Deletion,
                    expected_symbol: sym(t.phones[e]),
                    realized_symbol: None,
                    frame_span: (anchor, anchor),
                    duration_z: 0.0,
                    expected_index: e,
                    realized_index: None,
                    mean_posterior: None,
                });
            }
        }
    }
    ops
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::Posteriorgram;
    use ndarray::Array2;

    /// Realized path with one segment per symbol, `len` frames each, separated by one blank.
    fn path(symbols: &[usize], lens: &[usize], inv: &PhonemeInventory) -> AlignmentPath {
        let mut labels = Vec::new();
        for (&s, &l) in symbols.iter().zip(lens) {
            labels.extend(std::iter::repeat_n(Some(s), l));
            labels.push(None);
        }
        let width = inv.len() + 1;
        let post = Posteriorgram::new(Array2::from_elem((labels.len(), width), 1.0 / width as f64), 62.5, 0).unwrap();
        AlignmentPath::from_labels(labels, &post)
    }

    fn syms(text: &str, inv: &PhonemeInventory) -> Vec<usize> {
        ExpectedTranscript::parse(text, inv).unwrap().phones
    }

    const CFG: EditOpConfig = EditOpConfig {
        frame_ms: 10.0,
        z_prolong: 2.5,
    };

    #[test]
    fn insertion_run_slides_to_the_pause() {
        let inv = PhonemeInventory::demo();
        // "l | d i l _ d i l s": the earliest placement takes the word-final l
        let r = syms("a-l-d-i-l-d-i-l-s", &inv);
        let e = syms("a-l-d-i-l-s", &inv);
        let mut steps = levenshtein_ops(&r, &e);
        let ins = |st: &[EditStep]| -> Vec<usize> {
            st.iter()
                .filter_map(|s| match s {
                    EditStep::Insert { r, .. } => Some(*r),
                    _ => None,
                })
                .collect()
        };
        assert_eq!(ins(&steps), vec![1, 2, 3]);
        settle_insertions(&mut steps, &r, |x| x == 4);
        assert_eq!(ins(&steps), vec![2, 3, 4]);
        assert!(steps.iter().all(|s| match *s {
            EditStep::Match { r: a, e: b } => r[a] == e[b],
            EditStep::Insert { e: b, .. } => b == 2,
            _ => false,
        }));
        let mut unchanged = levenshtein_ops(&r, &e);
        settle_insertions(&mut unchanged, &r, |_| false);
        assert_eq!(unchanged, levenshtein_ops(&r, &e));
    }

    #[test]
    fn repeated_word_is_one_contiguous_run() {
        let inv = PhonemeInventory::demo();
        let r = syms("d-a-b-a-l-b-a-l", &inv);
        let e = syms("d-a-b-a-l", &inv);
        let inserted: Vec<usize> = levenshtein_ops(&r, &e)
            .into_iter()
            .filter_map(|s| match s {
                EditStep::Insert { r, .. } => Some(r),
                _ => None,
            })
            .collect();
        assert_eq!(inserted, vec![2, 3, 4]);
    }

    #[test]
    fn repetition_is_one_early_insertion() {
        let inv = PhonemeInventory::demo();
        let t = ExpectedTranscript::parse("bol", &inv).unwrap();
        let realized = syms("b-b-o-l", &inv);
        let lens = [10, 10, 17, 11];
        let ops = classify_edit_ops(&path(&realized, &lens, &inv), &t, &inv, &CFG);
        assert_eq!(ops.len(), 1);
        assert_eq!(ops[0].kind, EditKind::Insertion);
        assert_eq!(ops[0].realized_symbol.as_deref(), Some("b"));
        assert_eq!(ops[0].realized_index, Some(0));
        assert_eq!(ops[0].expected_index, 0);
    }

    #[test]
    fn missing_final_phone_is_deletion() {
        let inv = PhonemeInventory::demo();
        let t = ExpectedTranscript::parse("bol", &inv).unwrap();
        let p = path(&syms("bo", &inv), &[10, 17], &inv);
        let ops = classify_edit_ops(&p, &t, &inv, &CFG);
        assert_eq!(ops.len(), 1);
        assert_eq!(ops[0].kind, EditKind::Deletion);
        assert_eq!(ops[0].expected_symbol.as_deref(), Some("l"));
        let anchor = p.segments[1].end_frame;
        assert_eq!(ops[0].frame_span, (anchor, anchor));
    }

    #[test]
    fn long_vowel_is_prolongation() {
        let inv = PhonemeInventory::from_json(
            r#"{"name":"x","blank_index":0,"symbols":[
                {"symbol":"b","mean_ms":100,"std_ms":30},
                {"symbol":"o","mean_ms":120,"std_ms":40,"class":"vowel"}]}"#,
        )
        .unwrap();
        let t = ExpectedTranscript::parse("bo", &inv).unwrap();
        let ops = classify_edit_ops(&path(&syms("bo", &inv), &[10, 90], &inv), &t, &inv, &CFG);
        assert_eq!(ops.len(), 1);
        assert_eq!(ops[0].kind, EditKind::Prolongation);
        assert!((ops[0].duration_z - 19.5).abs() < 1e-12);
    }

    #[test]
    fn substitution_preferred_over_indel_pair() {
        let steps = levenshtein_ops(&[0, 5, 2], &[0, 1, 2]);
        assert_eq!(steps[1], EditStep::Substitute { r: 1, e: 1 });
        assert_eq!(steps.len(), 3);
    }

    #[test]
    fn identical_sequences_have_no_ops() {
        let inv = PhonemeInventory::demo();
        let t = ExpectedTranscript::parse("bal dio", &inv).unwrap();
        let p = path(&t.phones, &[10, 17, 11, 11, 16, 17], &inv);
        assert!(classify_edit_ops(&p, &t, &inv, &CFG).is_empty());
    }
}
