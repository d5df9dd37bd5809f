use super::{AlignmentPath, Posteriorgram};

pub const DEFAULT_REFINE_WINDOW: usize = 3;

/// Local boundary refinement.
///
/// Each boundary shared by two touching segments may move up to `window`
/// frames either way; it lands where the sum of both segments' mean
/// posteriors is highest, keeping the original position on ties and every
/// segment at least one frame long. Boundaries are visited left to right.
/// Segment order and symbols never change.
pub fn refine_alignment(raw: &AlignmentPath, post: &Posteriorgram, window: usize) -> AlignmentPath {
    if window == 0 || raw.segments.len() < 2 || raw.frames() != post.frames() {
        return raw.clone();
    }
    let mut segs = raw.segments.clone();
    let mean = |sym: usize, a: usize, b: usize| -> f64 {
        (a..b).map(|f| post.prob(f, Some(sym))).sum::<f64>() / (b - a) as f64
    };
    for i in 0..segs.len() - 1 {
        let (left, right) = (&segs[i], &segs[i + 1]);
        if left.end_frame != right.start_frame {
            continue;
        }
        let boundary = left.end_frame;
        let lo = boundary.saturating_sub(window).max(left.start_frame + 1);
        let hi = (boundary + window).min(right.end_frame - 1);
        let objective =
            |b: usize| mean(left.symbol, left.start_frame, b) + mean(right.symbol, b, right.end_frame);
        let mut best = boundary;
        let mut best_score = objective(boundary);
        for b in lo..=hi {
            let s = objective(b);
            if s > best_score {
                best = b;
                best_score = s;
            }
        }
        segs[i].end_frame = best;
        segs[i + 1].start_frame = best;
    }

    let mut labels = raw.frame_labels.clone();
    for s in &segs {
        labels[s.start_frame..s.end_frame].fill(Some(s.symbol));
    }
    AlignmentPath::from_labels(labels, post)
}
