use std::ops::Range;

use crate::alignment::{EditKind, ExpectedTranscript, PhonemeEditOp, PhonemeInventory};
use crate::frontend::{FeatureMatrix, FrameClock};

use super::{Candidate, Category, CategoryScores, Thresholds};

/// Realized segments with a mean posterior below this are low-confidence.
pub const LOW_POSTERIOR: f64 = 0.5;

/// Everything the rules read.
#[derive(Debug, Clone, Copy)]
pub struct ScoringContext<'a> {
    pub ops: &'a [PhonemeEditOp],
    pub transcript: &'a ExpectedTranscript,
    pub inventory: &'a PhonemeInventory,
    /// Must carry an `energy_db` channel on the same frame grid as the ops.
    pub energy: &'a FeatureMatrix,
    pub clock: &'a FrameClock,
}

/// Maximal runs of frames below `silence_db` with audible frames on both sides.
pub fn silence_runs(energy_db: &[f64], silence_db: f64) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    let mut t = 0;
    while t < energy_db.len() {
        if energy_db[t] >= silence_db {
            t += 1;
            continue;
        }
        let start = t;
        while t < energy_db.len() && energy_db[t] < silence_db {
            t += 1;
        }
        if start > 0 && t < energy_db.len() {
            runs.push(start..t);
        }
    }
    runs
}

/// Fraction of the run reproducing `unit` periodically, counted over whole
/// copies of the unit so that partial copies score below 1. A run shorter
/// than the unit scores 0.
fn unit_score(run: &[usize], unit: &[usize]) -> f64 {
    if unit.is_empty() || run.len() < unit.len() {
        return 0.0;
    }
    let copies = run.len().div_ceil(unit.len());
    let hits = run.iter().enumerate().filter(|&(j, &p)| p == unit[j % unit.len()]).count();
    hits as f64 / (copies * unit.len()) as f64
}

/// Repetition scores for a run of inserted phones anchored before expected
/// position `e`. Units adjacent to the anchor on either side are tried; a
/// unit identical to a larger unit at the same place counts only as the
/// larger one.
fn repetition_scores(run: &[usize], e: usize, t: &ExpectedTranscript, syllables: &[Range<usize>]) -> CategoryScores {
    let words = t.words();
    let n = t.len();
    let touching = |r: &Range<usize>| r.start == e || r.end == e;
    let word_units: Vec<Range<usize>> = words.iter().filter(|r| touching(r)).cloned().collect();
    let syl_units: Vec<Range<usize>> = syllables
        .iter()
        .filter(|r| touching(r) && !word_units.contains(r))
        .cloned()
        .collect();
    let mut sound_units: Vec<Range<usize>> = Vec::new();
    if e < n {
        sound_units.push(e..e + 1);
    }
    if e > 0 {
        sound_units.push(e - 1..e);
    }
    sound_units.retain(|r| !syl_units.contains(r) && !word_units.contains(r));

    let best = |units: &[Range<usize>]| {
        units
            .iter()
            .map(|r| unit_score(run, &t.phones[r.clone()]))
            .fold(0.0, f64::max)
    };
    let mut s = CategoryScores::default();
    s.set(Category::SoundRepetition, best(&sound_units));
    s.set(Category::SyllableRepetition, best(&syl_units));
    s.set(Category::WordRepetition, best(&word_units));
    s
}

/// Rule-based canonical scoring of edit ops and silences.
///
/// * a run of inserted phones is scored against the adjacent sound,
///   syllable and word units of the transcript;
/// * a prolongation op scores `min(1, duration_z / 5)`;
/// * a silence of at least `silence_block_ms` between speech is a silent
///   block scoring `min(1, duration / (2 * silence_block_ms))`;
/// * consecutive substitutions or insertions that are audible but decoded
///   with mean posterior below [`LOW_POSTERIOR`] form an audible block
///   scoring one minus that posterior;
/// * deletions and other substitutions become zero-score candidates.
///
/// Candidate atypicality starts at `1 - best canonical score`.
pub fn canonical_scores(ctx: &ScoringContext<'_>, th: &Thresholds) -> Vec<Candidate> {
    let Some(col) = ctx.energy.channel_index("energy_db") else {
        return Vec::new();
    };
    let energy: Vec<f64> = ctx.energy.data.column(col).to_vec();
    let frames = energy.len();
    let span_energy = |(a, b): (usize, usize)| {
        let (a, b) = (a.min(frames), b.min(frames));
        if b <= a {
            f64::NEG_INFINITY
        } else {
            energy[a..b].iter().sum::<f64>() / (b - a) as f64
        }
    };
    let ops = ctx.ops;
    let mut out: Vec<Candidate> = Vec::new();
    let mut push = |start: usize, end: usize, scores: CategoryScores, op_ids: Vec<usize>| {
        let (start_s, end_s) = ctx.clock.span_s(start, end);
        out.push(Candidate {
            start_frame: start,
            end_frame: end,
            start_s,
            end_s,
            atypicality: 1.0 - scores.best().1,
            scores,
            contributing_edit_ops: op_ids,
        });
    };
    let hull = |ids: &[usize]| {
        let start = ids.iter().map(|&i| ops[i].frame_span.0).min().unwrap_or(0);
        let end = ids.iter().map(|&i| ops[i].frame_span.1).max().unwrap_or(0);
        (start, end)
    };
    let follows = |a: &PhonemeEditOp, b: &PhonemeEditOp| match (a.realized_index, b.realized_index) {
        (Some(x), Some(y)) => y == x + 1,
        _ => false,
    };

    let low_conf = |op: &PhonemeEditOp| {
        matches!(op.kind, EditKind::Substitution | EditKind::Insertion)
            && op.mean_posterior.is_some_and(|p| p < LOW_POSTERIOR)
            && span_energy(op.frame_span) >= th.silence_db
    };
    let mut used = vec![false; ops.len()];
    let mut i = 0;
    while i < ops.len() {
        if !low_conf(&ops[i]) {
            i += 1;
            continue;
        }
        let mut ids = vec![i];
        while i + 1 < ops.len() && low_conf(&ops[i + 1]) && follows(&ops[i], &ops[i + 1]) {
            i += 1;
            ids.push(i);
        }
        let (mut mass, mut len) = (0.0, 0.0);
        for &k in &ids {
            let f = (ops[k].frame_span.1 - ops[k].frame_span.0) as f64;
            mass += ops[k].mean_posterior.unwrap_or(0.0) * f;
            len += f;
        }
        for &k in &ids {
            used[k] = true;
        }
        let (a, b) = hull(&ids);
        push(a, b, CategoryScores::only(Category::BlockAudible, 1.0 - mass / len.max(1.0)), ids);
        i += 1;
    }

    let syllables = ctx.transcript.syllables(ctx.inventory);
    let mut i = 0;
    while i < ops.len() {
        let op = &ops[i];
        if used[i] {
            i += 1;
            continue;
        }
        match op.kind {
            EditKind::Insertion => {
                let mut ids = vec![i];
                while i + 1 < ops.len()
                    && !used[i + 1]
                    && ops[i + 1].kind == EditKind::Insertion
                    && ops[i + 1].expected_index == op.expected_index
                    && follows(&ops[i], &ops[i + 1])
                {
                    i += 1;
                    ids.push(i);
                }
                let run: Vec<usize> = ids
                    .iter()
                    .filter_map(|&k| ops[k].realized_symbol.as_deref())
                    .filter_map(|s| ctx.inventory.index_of(s))
                    .collect();
                let scores = repetition_scores(&run, op.expected_index, ctx.transcript, &syllables);
                let (a, b) = hull(&ids);
                push(a, b, scores, ids);
            }
            EditKind::Prolongation => {
                let scores = CategoryScores::only(Category::Prolongation, op.duration_z / 5.0);
                push(op.frame_span.0, op.frame_span.1, scores, vec![i]);
            }
            EditKind::Substitution => {
                push(op.frame_span.0, op.frame_span.1, CategoryScores::default(), vec![i]);
            }
            EditKind::Deletion => {
                let a = op.frame_span.0.min(frames.saturating_sub(1));
                push(a, a + 1, CategoryScores::default(), vec![i]);
            }
        }
        i += 1;
    }

    let sr = ctx.clock.sample_rate as f64;
    let half_win_s = ctx.clock.win_size as f64 / 2.0 / sr;
    let ext = ctx.clock.win_size / 2 / ctx.clock.hop;
    for run in silence_runs(&energy, th.silence_db) {
        let start_s = ctx.clock.center_s(run.start) - half_win_s;
        let end_s = ctx.clock.center_s(run.end - 1) + half_win_s;
        let dur_ms = (end_s - start_s) * 1000.0;
        if dur_ms < th.silence_block_ms {
            continue;
        }
        let scores = CategoryScores::only(Category::BlockSilent, dur_ms / (2.0 * th.silence_block_ms));
        out.push(Candidate {
            start_frame: run.start.saturating_sub(ext),
            end_frame: (run.end + ext).min(frames),
            start_s,
            end_s,
            atypicality: 1.0 - scores.best().1,
            scores,
            contributing_edit_ops: Vec::new(),
        });
    }

    out.sort_by(|a, b| {
        (a.start_frame, a.end_frame)
            .cmp(&(b.start_frame, b.end_frame))
            .then(a.contributing_edit_ops.cmp(&b.contributing_edit_ops))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::FrontendConfig;
    use ndarray::Array2;

    fn op(kind: EditKind, exp: Option<&str>, real: Option<&str>, span: (usize, usize), e: usize, r: Option<usize>) -> PhonemeEditOp {
        PhonemeEditOp {
            kind,
            expected_symbol: exp.map(String::from),
            realized_symbol: real.map(String::from),
            frame_span: span,
            duration_z: 0.0,
            expected_index: e,
            realized_index: r,
            mean_posterior: r.map(|_| 0.9),
        }
    }

    fn energy(levels: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(
            Array2::from_shape_vec((levels.len(), 1), levels.to_vec()).unwrap(),
            62.5,
            vec!["energy_db".into()],
        )
        .unwrap()
    }

    struct Fixture {
        inv: PhonemeInventory,
        t: ExpectedTranscript,
        clock: FrameClock,
    }

    fn fixture(text: &str) -> Fixture {
        let inv = PhonemeInventory::demo();
        let t = ExpectedTranscript::parse(text, &inv).unwrap();
        Fixture {
            inv,
            t,
            clock: FrameClock::new(&FrontendConfig::default(), 16000),
        }
    }

    fn score(f: &Fixture, ops: &[PhonemeEditOp], levels: &[f64]) -> Vec<Candidate> {
        let e = energy(levels);
        let ctx = ScoringContext {
            ops,
            transcript: &f.t,
            inventory: &f.inv,
            energy: &e,
            clock: &f.clock,
        };
        canonical_scores(&ctx, &Thresholds::default())
    }

    #[test]
    fn inserted_copy_of_next_phone_is_sound_repetition() {
        let f = fixture("bol");
        let ops = [op(EditKind::Insertion, None, Some("b"), (0, 8), 0, Some(0))];
        let c = score(&f, &ops, &[-20.0; 40]);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].scores, CategoryScores::only(Category::SoundRepetition, 1.0));
        assert_eq!(c[0].atypicality, 0.0);
    }

    #[test]
    fn inserted_first_syllable_is_syllable_repetition() {
        let f = fixture("ba-lo");
        let ops = [
            op(EditKind::Insertion, None, Some("b"), (0, 6), 0, Some(0)),
            op(EditKind::Insertion, None, Some("a"), (6, 14), 0, Some(1)),
        ];
        let c = score(&f, &ops, &[-20.0; 40]);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].scores.best(), (Category::SyllableRepetition, 1.0));
        assert_eq!(c[0].scores.sound_repetition, 0.5);
        assert_eq!(c[0].scores.word_repetition, 0.0);
        assert_eq!((c[0].start_frame, c[0].end_frame), (0, 14));
    }

    #[test]
    fn single_syllable_word_repeat_is_word_repetition() {
        let f = fixture("da bal");
        let ops: Vec<_> = ["b", "a", "l"]
            .iter()
            .enumerate()
            .map(|(k, s)| op(EditKind::Insertion, None, Some(s), (10 + 5 * k, 15 + 5 * k), 2, Some(2 + k)))
            .collect();
        let c = score(&f, &ops, &[-20.0; 60]);
        assert_eq!(c[0].scores.best(), (Category::WordRepetition, 1.0));
        assert_eq!(c[0].scores.syllable_repetition, 0.0);
    }

    #[test]
    fn prolongation_grades_by_z() {
        let f = fixture("bol");
        let mut p = op(EditKind::Prolongation, Some("o"), Some("o"), (5, 60), 1, Some(1));
        p.duration_z = 19.5;
        let c = score(&f, &[p.clone()], &[-20.0; 80]);
        assert_eq!(c[0].scores.prolongation, 1.0);
        p.duration_z = 3.0;
        assert!((score(&f, &[p], &[-20.0; 80])[0].scores.prolongation - 0.6).abs() < 1e-12);
    }

    #[test]
    fn long_silence_between_speech_is_silent_block() {
        let f = fixture("bol");
        // Silence of 25 frames: 24 hops + one 1024-sample window = 448 ms.
        let mut levels = vec![-20.0; 60];
        levels[20..45].fill(-100.0);
        let c = score(&f, &[], &levels);
        assert_eq!(c.len(), 1);
        let dur = c[0].end_s - c[0].start_s;
        assert!((dur - 0.448).abs() < 1e-9);
        assert!((c[0].scores.block_silent - 0.448 / 0.5).abs() < 1e-9);
        assert!(c[0].contributing_edit_ops.is_empty());
    }

    #[test]
    fn short_or_trailing_silence_is_ignored() {
        let f = fixture("bol");
        let mut levels = vec![-20.0; 60];
        levels[20..25].fill(-100.0);
        levels[50..].fill(-100.0);
        assert!(score(&f, &[], &levels).is_empty());
    }

    #[test]
    fn low_confidence_audible_substitution_is_audible_block() {
        let f = fixture("bol");
        let mut s = op(EditKind::Substitution, Some("o"), Some("u"), (10, 20), 1, Some(1));
        s.mean_posterior = Some(0.3);
        let c = score(&f, &[s.clone()], &[-30.0; 40]);
        assert!((c[0].scores.block_audible - 0.7).abs() < 1e-12);
        // Same op in silence is just a substitution.
        let c = score(&f, &[s], &[-90.0; 40]);
        assert_eq!(c[0].scores.best().1, 0.0);
        assert_eq!(c[0].atypicality, 1.0);
    }

    #[test]
    fn deletion_is_zero_score_one_frame_candidate() {
        let f = fixture("bol");
        let d = op(EditKind::Deletion, Some("l"), None, (30, 30), 2, None);
        let c = score(&f, &[d], &[-20.0; 40]);
        assert_eq!((c[0].start_frame, c[0].end_frame), (30, 31));
        assert_eq!(c[0].scores, CategoryScores::default());
    }

    #[test]
    fn unit_score_counts_whole_copies() {
        assert_eq!(unit_score(&[1], &[1, 2]), 0.0);
        assert_eq!(unit_score(&[1, 2, 1], &[1, 2]), 0.75);
        assert_eq!(unit_score(&[1, 2, 1, 2], &[1, 2]), 1.0);
        assert_eq!(unit_score(&[1, 1], &[1]), 1.0);
        assert_eq!(unit_score(&[3], &[1]), 0.0);
    }
}
