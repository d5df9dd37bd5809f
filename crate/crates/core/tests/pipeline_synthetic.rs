use udm_core::alignment::{EditKind, PhonemeInventory};
use udm_core::classifier::Category;
use udm_core::eval::EventSpan;
use udm_core::report::{AnalysisConfig, AnalysisReport, Analyzer};
use udm_core::synth::{
    generate_synthetic_case, random_spec, CategoryPriors, Injection, InjectionParams, SynthesisSpec,
};

fn analyzer() -> Analyzer {
    let text = include_str!("../data/analysis_synthetic.json");
    let cfg: AnalysisConfig = serde_json::from_str(text).unwrap();
    Analyzer::new(PhonemeInventory::demo(), cfg)
}

fn run(a: &Analyzer, spec: &SynthesisSpec) -> (AnalysisReport, Vec<EventSpan>) {
    let inv = a.inventory();
    let case = generate_synthetic_case(spec, inv, &a.config().frontend).unwrap();
    let text = spec.transcript(inv).unwrap().source_text;
    let r = a.analyze("case", &case.audio, "case.wav", &text).unwrap();
    (r, case.gold.events)
}

fn words(w: &[&[&str]]) -> Vec<Vec<String>> {
    w.iter().map(|p| p.iter().map(|s| s.to_string()).collect()).collect()
}

#[test]
fn single_prolongation_is_found() {
    let a = analyzer();
    let mut spec = SynthesisSpec::new(words(&[&["b", "a"], &["s", "o", "l"]]), 5);
    spec.injections.push(Injection {
        category: Category::Prolongation,
        position: 3,
        params: InjectionParams {
            factor: 3.0,
            ..InjectionParams::default()
        },
    });
    let (r, gold) = run(&a, &spec);
    let g = gold.iter().find(|g| g.category == Category::Prolongation).unwrap();
    let hit = r
        .events
        .iter()
        .filter(|e| e.category == Category::Prolongation)
        .map(|e| EventSpan::from(e).iou(g))
        .fold(0.0, f64::max);
    assert!(hit >= 0.5, "best prolongation IoU {hit}, events {:?}", r.events);
}

#[test]
fn candidate_spans_cover_their_ops() {
    let a = analyzer();
    let inv = PhonemeInventory::demo();
    for seed in 0..10 {
        let (r, _) = run(&a, &random_spec(seed, &inv, &CategoryPriors::default()));
        for c in &r.candidates {
            if c.contributing_edit_ops.is_empty() {
                assert_eq!(c.scores.best().0, Category::BlockSilent);
                continue;
            }
            let ops: Vec<_> = c.contributing_edit_ops.iter().map(|&i| &r.edit_ops[i]).collect();
            if ops.iter().any(|o| o.kind == EditKind::Deletion) {
                continue;
            }
            let start = ops.iter().map(|o| o.frame_span.0).min().unwrap();
            let end = ops.iter().map(|o| o.frame_span.1).max().unwrap();
            assert_eq!((c.start_frame, c.end_frame), (start, end), "seed {seed}");
        }
        for e in r.events.iter().filter(|e| e.category.is_canonical() && e.category != Category::BlockSilent) {
            assert!(!e.contributing_edit_ops.is_empty(), "seed {seed}: {e:?}");
        }
    }
}

#[test]
fn fluent_speech_has_no_insertions_or_deletions() {
    let a = analyzer();
    let inv = PhonemeInventory::demo();
    let n = 40;
    let clean = (0..n)
        .filter(|&seed| {
            let mut spec = random_spec(seed, &inv, &CategoryPriors::default());
            spec.injections.clear();
            let (r, _) = run(&a, &spec);
            !r.edit_ops
                .iter()
                .any(|o| matches!(o.kind, EditKind::Insertion | EditKind::Deletion))
        })
        .count();
    assert!(clean as f64 >= 0.95 * n as f64, "{clean}/{n} clean");
}

#[test]
fn analysis_is_deterministic() {
    let a = analyzer();
    let inv = PhonemeInventory::demo();
    let spec = random_spec(3, &inv, &CategoryPriors::default());
    let (mut x, _) = run(&a, &spec);
    let (mut y, _) = run(&a, &spec);
    x.timing = y.timing.clone();
    y.report_id = x.report_id.clone();
    assert_eq!(x.to_canonical_json(), y.to_canonical_json());
}
