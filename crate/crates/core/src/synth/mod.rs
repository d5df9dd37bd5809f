//! Tone-complex utterances with exact dysfluency ground truth.

mod corpus;
mod voice;

pub use corpus::{
    random_case, random_spec, synthetic_templates, write_case, CaseFiles, CategoryPriors, ManifestEntry,
    DEFAULT_TEMPLATE_TEMPERATURE,
};
pub use voice::{render_noise, Voice, VoiceMap};

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{fill_blanks, AlignmentError, ExpectedTranscript, PhonemeInventory};
use crate::classifier::Category;
use crate::eval::EventSpan;
use crate::frontend::{AudioBuffer, FrameClock, FrontendConfig, FrontendError};

pub const DEFAULT_SAMPLE_RATE: u32 = 16000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("synthesis spec has no phones")]
    Empty,
    #[error("injection position {position} out of range for {len} phones")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("cannot inject {0}")]
    Unsupported(Category),
    #[error("invalid injection parameter: {0}")]
    InvalidParam(String),
    #[error("category priors must be non-negative and sum to 1, got {0}")]
    BadPriors(f64),
    #[error("no voice for phone {0:?}")]
    MissingVoice(String),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InjectionParams {
    /// Extra copies for repetitions.
    pub extra_units: usize,
    /// Duration multiplier for prolongations.
    pub factor: f64,
    /// Length of an inserted silence or noise burst.
    pub duration_ms: f64,
    /// Silence after each repeated copy.
    pub gap_ms: f64,
    pub noise_rms: f64,
}

impl Default for InjectionParams {
    fn default() -> Self {
        Self {
            extra_units: 1,
            factor: 3.0,
            duration_ms: 400.0,
            gap_ms: 120.0,
            noise_rms: 0.03,
        }
    }
}

/// One injected dysfluency. `position` indexes the expected phone sequence:
/// the repeated sound, the first phone of the repeated syllable or word
/// (any phone inside it selects the enclosing unit), the prolonged phone,
/// the phone a silent block precedes, or the phone an audible block replaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Injection {
    pub category: Category,
    pub position: usize,
    #[serde(default)]
    pub params: InjectionParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSpec {
    /// Expected words as phone symbol lists.
    pub words: Vec<Vec<String>>,
    #[serde(default)]
    pub injections: Vec<Injection>,
    /// Category priors used when drawing random injections.
    #[serde(default)]
    pub priors: CategoryPriors,
    #[serde(default)]
    pub seed: u64,
    /// Per-phone tone parameters; derived from the inventory when absent.
    #[serde(default)]
    pub voices: Option<VoiceMap>,
    /// Log-space standard deviation of phone durations around the inventory mean.
    #[serde(default = "default_sigma")]
    pub duration_sigma: f64,
    #[serde(default = "default_rate")]
    pub sample_rate: u32,
    /// Silence before the first and after the last phone.
    #[serde(default = "default_edge")]
    pub edge_silence_ms: f64,
}

fn default_sigma() -> f64 {
    0.08
}
fn default_rate() -> u32 {
    DEFAULT_SAMPLE_RATE
}
fn default_edge() -> f64 {
    150.0
}

impl SynthesisSpec {
    pub fn new(words: Vec<Vec<String>>, seed: u64) -> Self {
        Self {
            words,
            injections: Vec::new(),
            priors: CategoryPriors::default(),
            seed,
            voices: None,
            duration_sigma: default_sigma(),
            sample_rate: default_rate(),
            edge_silence_ms: default_edge(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SynthError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn transcript(&self, inv: &PhonemeInventory) -> Result<ExpectedTranscript, SynthError> {
        if self.words.iter().all(Vec::is_empty) {
            return Err(SynthError::Empty);
        }
        Ok(ExpectedTranscript::from_words(&self.words, inv)?)
    }
}

pub type GoldEvent = EventSpan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub events: Vec<GoldEvent>,
    /// Phone at each frame centre; silence inherits the preceding phone.
    pub frame_labels: Vec<String>,
    pub frame_rate: f64,
}

impl GoldAnnotation {
    pub fn label_indices(&self, inv: &PhonemeInventory) -> Result<Vec<usize>, SynthError> {
        self.frame_labels
            .iter()
            .map(|s| inv.index_of(s).ok_or_else(|| SynthError::Alignment(AlignmentError::UnknownPhone(s.clone()))))
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCase {
    pub audio: AudioBuffer,
    pub transcript: ExpectedTranscript,
    pub gold: GoldAnnotation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Piece {
    /// A phone, or (with `noise`) the burst standing in for it.
    Phone { sym: usize, noise: Option<f64> },
    Silence,
}

#[derive(Debug, Clone, Copy)]
struct Unit {
    piece: Piece,
    samples: usize,
}

/// Renders `spec` and its ground truth on the frame grid of `cfg`.
pub fn generate_synthetic_case(
    spec: &SynthesisSpec,
    inv: &PhonemeInventory,
    cfg: &FrontendConfig,
) -> Result<SyntheticCase, SynthError> {
    let transcript = spec.transcript(inv)?;
    let voices = spec.voices.clone().unwrap_or_else(|| VoiceMap::for_inventory(inv));
    for &p in &transcript.phones {
        if voices.get(inv.symbol(p)).is_none() {
            return Err(SynthError::MissingVoice(inv.symbol(p).to_string()));
        }
    }
    if !(spec.duration_sigma >= 0.0) {
        return Err(SynthError::InvalidParam("duration_sigma must be >= 0".into()));
    }
    spec.priors.validate()?;
    let n = transcript.len();
    for inj in &spec.injections {
        validate(inj, n)?;
    }

    let sr = spec.sample_rate as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let log_normal = LogNormal::new(0.0, spec.duration_sigma).map_err(|e| SynthError::InvalidParam(e.to_string()))?;
    let mut draw = |sym: usize| -> usize {
        let ms = inv.entry(sym).mean_ms * log_normal.sample(&mut rng);
        (ms * sr / 1000.0).round().max(1.0) as usize
    };
    let samples_of = |ms: f64| (ms * sr / 1000.0).round() as usize;

    let words = transcript.words();
    let syllables = transcript.syllables(inv);
    let enclosing = |ranges: &[std::ops::Range<usize>], p: usize| {
        ranges.iter().find(|r| r.contains(&p)).cloned().unwrap_or(p..p + 1)
    };

    let mut units = vec![Unit { piece: Piece::Silence, samples: samples_of(spec.edge_silence_ms) }];
    // (category, first unit index, end unit index exclusive)
    let mut spans: Vec<(Category, usize, usize)> = Vec::new();

    for i in 0..n {
        let here = |c: Category| spec.injections.iter().filter(move |j| j.category == c);
        for inj in here(Category::BlockSilent).filter(|j| j.position == i) {
            let start = units.len();
            units.push(Unit { piece: Piece::Silence, samples: samples_of(inj.params.duration_ms) });
            spans.push((Category::BlockSilent, start, units.len()));
        }
        let repeats = [
            (Category::WordRepetition, &words),
            (Category::SyllableRepetition, &syllables),
        ];
        for (cat, ranges) in repeats {
            for inj in here(cat) {
                let unit = enclosing(ranges, inj.position);
                if unit.start != i {
                    continue;
                }
                let phones = &transcript.phones[unit];
                push_repeats(&mut units, &mut spans, cat, phones, inj, &mut draw, samples_of(inj.params.gap_ms));
            }
        }
        for inj in here(Category::SoundRepetition).filter(|j| j.position == i) {
            let phones = &transcript.phones[i..i + 1];
            push_repeats(&mut units, &mut spans, Category::SoundRepetition, phones, inj, &mut draw, samples_of(inj.params.gap_ms));
        }

        let sym = transcript.phones[i];
        let mut unit = Unit { piece: Piece::Phone { sym, noise: None }, samples: draw(sym) };
        let mut marked = None;
        for inj in spec.injections.iter().filter(|j| j.position == i) {
            match inj.category {
                Category::Prolongation => {
                    unit.samples = (unit.samples as f64 * inj.params.factor).round() as usize;
                    marked = Some(Category::Prolongation);
                }
                Category::BlockAudible => {
                    unit.piece = Piece::Phone { sym, noise: Some(inj.params.noise_rms) };
                    unit.samples = samples_of(inj.params.duration_ms);
                    marked = Some(Category::BlockAudible);
                }
                _ => {}
            }
        }
        if let Some(cat) = marked {
            spans.push((cat, units.len(), units.len() + 1));
        }
        units.push(unit);
    }
    units.push(Unit { piece: Piece::Silence, samples: samples_of(spec.edge_silence_ms) });

    let mut offsets = Vec::with_capacity(units.len() + 1);
    let mut samples = Vec::new();
    for u in &units {
        offsets.push(samples.len());
        match u.piece {
            Piece::Silence => samples.resize(samples.len() + u.samples, 0.0),
            Piece::Phone { noise: Some(rms), .. } => {
                samples.extend(render_noise(u.samples, rms, spec.sample_rate, &mut rng))
            }
            Piece::Phone { sym, noise: None } => {
                let voice = voices.get(inv.symbol(sym)).expect("checked above");
                samples.extend(voice.render(u.samples, spec.sample_rate));
            }
        }
    }
    offsets.push(samples.len());
    let audio = AudioBuffer::new(samples, spec.sample_rate)?;

    let mut events: Vec<GoldEvent> = spans
        .iter()
        .map(|&(category, a, b)| GoldEvent {
            category,
            start_s: offsets[a] as f64 / sr,
            end_s: offsets[b] as f64 / sr,
        })
        .collect();
    events.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));

    let frames = cfg.frame_count(audio.len())?;
    let clock = FrameClock::new(cfg, spec.sample_rate);
    let mut labels = Vec::with_capacity(frames);
    let mut u = 0;
    for f in 0..frames {
        let centre = f * cfg.hop + cfg.n_fft / 2;
        while u + 1 < units.len() && offsets[u + 1] <= centre {
            u += 1;
        }
        labels.push(match units[u].piece {
            Piece::Phone { sym, .. } => Some(sym),
            Piece::Silence => None,
        });
    }
    let frame_labels = fill_blanks(&labels)
        .into_iter()
        .map(|l| l.map_or_else(String::new, |s| inv.symbol(s).to_string()))
        .collect();

    Ok(SyntheticCase {
        audio,
        transcript,
        gold: GoldAnnotation {
            events,
            frame_labels,
            frame_rate: clock.frame_rate(),
        },
    })
}

fn push_repeats(
    units: &mut Vec<Unit>,
    spans: &mut Vec<(Category, usize, usize)>,
    cat: Category,
    phones: &[usize],
    inj: &Injection,
    draw: &mut impl FnMut(usize) -> usize,
    gap: usize,
) {
    let start = units.len();
    let mut end = start;
    for _ in 0..inj.params.extra_units {
        for &p in phones {
            units.push(Unit { piece: Piece::Phone { sym: p, noise: None }, samples: draw(p) });
        }
        end = units.len();
        units.push(Unit { piece: Piece::Silence, samples: gap });
    }
    if end > start {
        spans.push((cat, start, end));
    }
}

fn validate(inj: &Injection, n: usize) -> Result<(), SynthError> {
    if inj.position >= n {
        return Err(SynthError::PositionOutOfRange { position: inj.position, len: n });
    }
    let p = &inj.params;
    let bad = |m: &str| Err(SynthError::InvalidParam(m.to_string()));
    match inj.category {
        Category::Atypical => return Err(SynthError::Unsupported(Category::Atypical)),
        Category::SoundRepetition | Category::SyllableRepetition | Category::WordRepetition => {
            if p.extra_units == 0 {
                return bad("extra_units must be >= 1");
            }
            if !(p.gap_ms >= 0.0) {
                return bad("gap_ms must be >= 0");
            }
        }
        Category::Prolongation if !(p.factor >= 1.0) => return bad("factor must be >= 1"),
        Category::BlockSilent | Category::BlockAudible if !(p.duration_ms > 0.0) => {
            return bad("duration_ms must be > 0")
        }
        Category::BlockAudible if !(p.noise_rms > 0.0 && p.noise_rms < 1.0) => {
            return bad("noise_rms must be in (0, 1)")
        }
        _ => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(ws: &[&str]) -> Vec<Vec<String>> {
        ws.iter().map(|w| w.split('-').map(String::from).collect()).collect()
    }

    fn case(spec: &SynthesisSpec) -> SyntheticCase {
        generate_synthetic_case(spec, &PhonemeInventory::demo(), &FrontendConfig::default()).unwrap()
    }

    #[test]
    fn zero_injections_have_no_events_and_expected_labels() {
        let spec = SynthesisSpec::new(words(&["b-a-l", "d-o-g-i"]), 3);
        let c = case(&spec);
        assert!(c.gold.events.is_empty());
        let mut seen: Vec<&str> = c.gold.frame_labels.iter().map(String::as_str).collect();
        seen.dedup();
        assert_eq!(seen, vec!["b", "a", "l", "d", "o", "g", "i"]);
        assert_eq!(c.gold.frame_labels.len(), FrontendConfig::default().frame_count(c.audio.len()).unwrap());
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SynthesisSpec::new(words(&["b-a-l", "d-o"]), 11);
        assert_eq!(case(&spec).audio, case(&spec).audio);
        let other = SynthesisSpec { seed: 12, ..spec.clone() };
        assert_ne!(case(&spec).audio, case(&other).audio);
    }

    #[test]
    fn sound_repetition_spans_the_extra_units() {
        let mut spec = SynthesisSpec::new(words(&["b-a-l", "d-o"]), 0);
        spec.edge_silence_ms = 100.0;
        spec.injections.push(Injection {
            category: Category::SoundRepetition,
            position: 0,
            params: InjectionParams { extra_units: 2, gap_ms: 100.0, ..Default::default() },
        });
        let c = case(&spec);
        assert_eq!(c.gold.events.len(), 1);
        let ev = &c.gold.events[0];
        assert_eq!(ev.category, Category::SoundRepetition);
        assert!((ev.start_s - 0.1).abs() < 1e-9);
        // two copies of /b/ around 105 ms each with one 100 ms gap between
        assert!(ev.end_s - ev.start_s > 0.25 && ev.end_s - ev.start_s < 0.4, "{ev:?}");
        assert_eq!(c.transcript.phones.len(), 5);
    }

    #[test]
    fn prolongation_and_blocks_mark_their_spans() {
        let mut spec = SynthesisSpec::new(words(&["b-a-l", "d-o", "m-i"]), 5);
        spec.duration_sigma = 0.0;
        let inj = |category, position, params| Injection { category, position, params };
        spec.injections = vec![
            inj(Category::Prolongation, 1, InjectionParams { factor: 3.0, ..Default::default() }),
            inj(Category::BlockSilent, 3, InjectionParams { duration_ms: 400.0, ..Default::default() }),
            inj(Category::BlockAudible, 5, InjectionParams { duration_ms: 250.0, ..Default::default() }),
        ];
        let c = case(&spec);
        let cats: Vec<Category> = c.gold.events.iter().map(|e| e.category).collect();
        assert_eq!(cats, vec![Category::Prolongation, Category::BlockSilent, Category::BlockAudible]);
        let dur = |i: usize| c.gold.events[i].end_s - c.gold.events[i].start_s;
        assert!((dur(0) - 0.51).abs() < 1e-3);
        assert!((dur(1) - 0.4).abs() < 1e-3);
        assert!((dur(2) - 0.25).abs() < 1e-3);
    }

    #[test]
    fn word_repetition_selects_enclosing_word() {
        let mut spec = SynthesisSpec::new(words(&["b-a", "d-o-g-i"]), 2);
        spec.injections.push(Injection { category: Category::WordRepetition, position: 4, params: Default::default() });
        let c = case(&spec);
        let mut seen: Vec<&str> = c.gold.frame_labels.iter().map(String::as_str).collect();
        seen.dedup();
        assert_eq!(seen, vec!["b", "a", "d", "o", "g", "i", "d", "o", "g", "i"]);
    }

    #[test]
    fn invalid_injections_are_rejected() {
        let inv = PhonemeInventory::demo();
        let cfg = FrontendConfig::default();
        let mut spec = SynthesisSpec::new(words(&["b-a"]), 0);
        spec.injections.push(Injection { category: Category::Prolongation, position: 2, params: Default::default() });
        assert!(matches!(
            generate_synthetic_case(&spec, &inv, &cfg),
            Err(SynthError::PositionOutOfRange { position: 2, len: 2 })
        ));
        spec.injections[0] = Injection { category: Category::Atypical, position: 0, params: Default::default() };
        assert!(matches!(generate_synthetic_case(&spec, &inv, &cfg), Err(SynthError::Unsupported(_))));
        spec.injections.clear();
        spec.words = vec![vec![]];
        assert!(matches!(generate_synthetic_case(&spec, &inv, &cfg), Err(SynthError::Empty)));
    }
}
