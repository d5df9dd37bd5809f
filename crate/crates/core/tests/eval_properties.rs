use proptest::prelude::*;

use udm_core::alignment::{fill_blanks, AlignmentPath, Segment};
use udm_core::eval::{
    alignment_error_rate, cohens_kappa, evaluate_detection, label_error_rate, real_time_factor, DetectionMetrics,
    EventSpan,
};
use udm_core::Category;

fn span() -> impl Strategy<Value = EventSpan> {
    (0usize..3, 0u32..40, 1u32..10).prop_map(|(c, start, len)| EventSpan {
        category: Category::CANONICAL[c],
        start_s: start as f64 * 0.1,
        end_s: (start + len) as f64 * 0.1,
    })
}

fn spans() -> impl Strategy<Value = Vec<EventSpan>> {
    proptest::collection::vec(span(), 0..8)
}

fn path(labels: Vec<Option<usize>>) -> AlignmentPath {
    let mut segments: Vec<Segment> = Vec::new();
    for (t, l) in labels.iter().enumerate() {
        if let Some(s) = *l {
            match segments.last_mut() {
                Some(seg) if seg.symbol == s && seg.end_frame == t => seg.end_frame = t + 1,
                _ => segments.push(Segment {
                    symbol: s,
                    start_frame: t,
                    end_frame: t + 1,
                    mean_posterior: 1.0,
                }),
            }
        }
    }
    AlignmentPath {
        frame_labels: labels,
        segments,
        log_score: 0.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn swapping_pred_and_gold_swaps_precision_and_recall(a in spans(), b in spans()) {
        let ab = evaluate_detection(&a, &b);
        let ba = evaluate_detection(&b, &a);
        prop_assert_eq!(ab.precision, ba.recall);
        prop_assert_eq!(ab.recall, ba.precision);
        prop_assert_eq!(ab.f1, ba.f1);
        prop_assert_eq!(ab.true_positives, ba.true_positives);
    }

    #[test]
    fn f1_ignores_event_order(a in spans(), b in spans(), rot in 0usize..8) {
        let m = evaluate_detection(&a, &b);
        let mut a2 = a.clone();
        a2.reverse();
        let mut b2 = b.clone();
        if !b2.is_empty() {
            let k = rot % b2.len();
            b2.rotate_left(k);
        }
        let m2 = evaluate_detection(&a2, &b2);
        prop_assert_eq!(m.f1, m2.f1);
        prop_assert_eq!(m.true_positives, m2.true_positives);
    }

    #[test]
    fn metrics_stay_in_unit_interval(a in spans(), b in spans()) {
        let m = evaluate_detection(&a, &b);
        for v in [m.precision, m.recall, m.f1, m.balanced_accuracy] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn aer_of_identical_alignment_is_zero(labels in proptest::collection::vec(proptest::option::of(0usize..4), 0..40)) {
        let p = path(labels.clone());
        let filled = fill_blanks(&labels);
        prop_assume!(filled.iter().all(Option::is_some));
        let gold: Vec<usize> = filled.into_iter().flatten().collect();
        prop_assert_eq!(alignment_error_rate(&p, &gold).unwrap(), 0.0);
    }

    #[test]
    fn aer_is_a_percentage(
        labels in proptest::collection::vec(proptest::option::of(0usize..4), 1..40),
        seed in proptest::collection::vec(0usize..4, 40),
    ) {
        let gold = &seed[..labels.len()];
        let aer = label_error_rate(&labels, gold).unwrap();
        prop_assert!((0.0..=100.0).contains(&aer));
    }
}

#[test]
fn worked_metric_examples() {
    let m = DetectionMetrics::from_counts(9, 1, 1);
    assert_eq!((m.precision, m.recall, m.f1), (0.9, 0.9, 0.9));
    assert_eq!(cohens_kappa(&['x', 'x', 'y', 'y'], &['x', 'y', 'x', 'y']).unwrap(), 0.0);
    assert_eq!(real_time_factor(1.0, 5.0).unwrap(), 0.2);
}
