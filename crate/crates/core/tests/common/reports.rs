//! Randomly generated reports with internally consistent events.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use udm_core::alignment::{EditKind, PhonemeEditOp};
use udm_core::classifier::{CalibrationModel, Candidate, CategoryScores, Thresholds};
use udm_core::frontend::{FeatureGroup, FrontendConfig};
use udm_core::report::{
    canonicalize, reanalyzed, AlignedSegment, AnalysisReport, AudioMeta, ConfigSnapshot, Timing,
};
use udm_core::Category;

const SYMBOLS: [&str; 6] = ["a", "b", "s&", "<o>", "\"m\"", "l"];

fn candidate(rng: &mut ChaCha8Rng, clock_s: f64) -> Candidate {
    let start = rng.random_range(0..150usize);
    let len = rng.random_range(1..40usize);
    let mut scores = CategoryScores::default();
    scores.set(Category::CANONICAL[rng.random_range(0..6)], rng.random::<f64>());
    if rng.random_bool(0.3) {
        scores.set(Category::CANONICAL[rng.random_range(0..6)], rng.random::<f64>());
    }
    Candidate {
        start_frame: start,
        end_frame: start + len,
        start_s: start as f64 * clock_s,
        end_s: (start + len) as f64 * clock_s,
        scores,
        atypicality: rng.random::<f64>(),
        contributing_edit_ops: (0..rng.random_range(0..3)).map(|_| rng.random_range(0..10)).collect(),
    }
}

/// A version-1 report whose events come from its own candidates.
pub fn random_report(seed: u64) -> AnalysisReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frontend = FrontendConfig::short_window();
    let frame_s = frontend.hop as f64 / 16000.0;
    let n_seg = rng.random_range(1..12);
    let mut t = 0.05 + rng.random::<f64>() * 0.1;
    let mut alignment = Vec::new();
    for _ in 0..n_seg {
        let d = 0.02 + rng.random::<f64>() * 0.3;
        alignment.push(AlignedSegment {
            symbol: SYMBOLS[rng.random_range(0..SYMBOLS.len())].to_string(),
            start_s: t,
            end_s: t + d,
            mean_posterior: rng.random::<f64>(),
        });
        t += d + if rng.random_bool(0.3) { rng.random::<f64>() * 0.2 } else { 0.0 };
    }
    let duration_s = t + 0.1;
    let kinds = [EditKind::Insertion, EditKind::Deletion, EditKind::Substitution, EditKind::Prolongation];
    let edit_ops = (0..rng.random_range(0..10))
        .map(|i| {
            let a = rng.random_range(0..150usize);
            let kind = kinds[rng.random_range(0..4)];
            let b = if kind == EditKind::Deletion { a } else { a + rng.random_range(1..30) };
            PhonemeEditOp {
                kind,
                expected_symbol: (kind != EditKind::Insertion).then(|| SYMBOLS[i % SYMBOLS.len()].to_string()),
                realized_symbol: (kind != EditKind::Deletion).then(|| SYMBOLS[(i + 1) % SYMBOLS.len()].to_string()),
                frame_span: (a, b),
                duration_z: rng.random::<f64>() * 8.0 - 2.0,
                expected_index: i,
                realized_index: (kind != EditKind::Deletion).then_some(i),
                mean_posterior: (kind != EditKind::Deletion).then(|| rng.random::<f64>()),
            }
        })
        .collect();
    let candidates: Vec<Candidate> = (0..rng.random_range(0..10)).map(|_| candidate(&mut rng, frame_s)).collect();
    let occluded_candidates: BTreeMap<FeatureGroup, Vec<Candidate>> = FeatureGroup::ALL
        .into_iter()
        .map(|g| {
            let mut c = candidates.clone();
            for x in &mut c {
                x.atypicality = rng.random::<f64>();
            }
            (g, c)
        })
        .collect();
    let mut thresholds = Thresholds::default();
    for c in Category::ALL {
        thresholds.sensitivity.set(c, rng.random::<f64>() * 0.6);
    }
    let base = AnalysisReport {
        report_id: format!("r{seed:08x}"),
        version: 1,
        audio: AudioMeta {
            path: format!("audio/case \"{seed}\" & co.wav"),
            duration_s,
            sample_rate: 16000,
        },
        transcript: "b-a s-o-l".into(),
        config: ConfigSnapshot {
            frontend,
            thresholds: thresholds.clone(),
            inventory: "demo".into(),
            calibration: CalibrationModel {
                temperature: 0.5 + rng.random::<f64>() * 4.0,
            },
            neural: rng.random_bool(0.5),
        },
        alignment,
        realized: Vec::new(),
        edit_ops,
        candidates,
        occluded_candidates,
        events: Vec::new(),
        verdicts: Vec::new(),
        timing: Timing {
            processing_s: rng.random::<f64>(),
            real_time_factor: rng.random::<f64>(),
        },
    };
    let mut base = canonicalize(&base).unwrap();
    base.realized = base.alignment.clone();
    let th = base.config.thresholds.clone();
    canonicalize(&reanalyzed(&base, &th)).unwrap()
}
