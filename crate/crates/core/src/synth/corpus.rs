use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::s;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alignment::{ExpectedTranscript, PhonemeInventory, TemplateSet, DEFAULT_BLANK_PRIOR};
use crate::classifier::Category;
use crate::frontend::{mel_spectrogram, mfcc, write_wav, AudioBuffer, FrontendConfig};

use super::{
    generate_synthetic_case, Injection, InjectionParams, SynthError, SynthesisSpec, SyntheticCase, VoiceMap,
};

pub const DEFAULT_TEMPLATE_TEMPERATURE: f64 = 3.0;

/// Relative injection frequencies per canonical category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryPriors(pub BTreeMap<Category, f64>);

impl Default for CategoryPriors {
    fn default() -> Self {
        Self(Category::CANONICAL.iter().map(|&c| (c, c.prior_percent() / 100.0)).collect())
    }
}

impl CategoryPriors {
    pub fn validate(&self) -> Result<(), SynthError> {
        let total: f64 = self.0.values().sum();
        if self.0.values().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-6 {
            return Err(SynthError::BadPriors(total));
        }
        Ok(())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Option<Category> {
        let total: f64 = self.0.iter().filter(|(c, w)| **w > 0.0 && c.is_canonical()).map(|(_, w)| w).sum();
        if !(total > 0.0) {
            return None;
        }
        let mut u = rng.random::<f64>() * total;
        for (&c, &w) in &self.0 {
            if w <= 0.0 || !c.is_canonical() {
                continue;
            }
            if u < w {
                return Some(c);
            }
            u -= w;
        }
        self.0.iter().rev().find(|(c, w)| **w > 0.0 && c.is_canonical()).map(|(c, _)| *c)
    }
}

/// Draws a random utterance of 3 to 5 words with one or two injections.
///
/// Words are built from CV, CVC and V syllables with no phone repeated
/// back to back; injections land on distinct words.
pub fn random_spec(seed: u64, inv: &PhonemeInventory, priors: &CategoryPriors) -> SynthesisSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0fc0_4905);
    let vowels: Vec<usize> = (0..inv.len()).filter(|&s| inv.is_vowel(s)).collect();
    let consonants: Vec<usize> = (0..inv.len()).filter(|&s| !inv.is_vowel(s)).collect();
    let (vowels, consonants) = match (vowels.is_empty(), consonants.is_empty()) {
        (false, false) => (vowels, consonants),
        _ => ((0..inv.len()).collect(), (0..inv.len()).collect()),
    };

    let mut last: Option<usize> = None;
    let mut pick = |pool: &[usize], rng: &mut ChaCha8Rng| -> usize {
        loop {
            let s = *pool.choose(rng).expect("non-empty pool");
            if Some(s) != last || pool.len() == 1 {
                last = Some(s);
                return s;
            }
        }
    };
    let n_words = rng.random_range(3..=5);
    let mut words: Vec<Vec<usize>> = Vec::new();
    for _ in 0..n_words {
        let mut w = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            let shape: f64 = rng.random();
            if shape >= 0.15 {
                w.push(pick(&consonants, &mut rng));
            }
            w.push(pick(&vowels, &mut rng));
            if shape >= 0.7 {
                w.push(pick(&consonants, &mut rng));
            }
        }
        words.push(w);
    }
    let words_sym: Vec<Vec<String>> = words
        .iter()
        .map(|w| w.iter().map(|&s| inv.symbol(s).to_string()).collect())
        .collect();
    let mut spec = SynthesisSpec::new(words_sym, seed);
    spec.priors = priors.clone();
    let t = spec.transcript(inv).expect("generated words are valid");

    let n_inj = rng.random_range(1..=2);
    let mut used = vec![false; t.word_boundaries.len()];
    for _ in 0..n_inj {
        for _attempt in 0..20 {
            let Some(cat) = priors.sample(&mut rng) else { break };
            if let Some(inj) = draw_injection(cat, &t, inv, &mut used, &mut rng) {
                spec.injections.push(inj);
                break;
            }
        }
    }
    spec
}

fn draw_injection(
    cat: Category,
    t: &ExpectedTranscript,
    inv: &PhonemeInventory,
    used: &mut [bool],
    rng: &mut ChaCha8Rng,
) -> Option<Injection> {
    let words = t.words();
    let syllables = t.syllables(inv);
    let first_syllable = |w: &std::ops::Range<usize>| syllables.iter().find(|s| s.start == w.start).cloned();
    let eligible: Vec<usize> = (0..words.len())
        .filter(|&i| !used[i])
        .filter(|&i| {
            let w = &words[i];
            let syl = first_syllable(w).unwrap_or(w.clone());
            match cat {
                Category::SoundRepetition => syl.len() >= 2,
                Category::SyllableRepetition => syl.len() < w.len(),
                Category::BlockSilent => i > 0,
                _ => true,
            }
        })
        .collect();
    let &w = eligible.choose(rng)?;
    used[w] = true;
    let word = words[w].clone();
    let mut params = InjectionParams::default();
    let position = match cat {
        Category::SoundRepetition | Category::SyllableRepetition | Category::WordRepetition => {
            params.extra_units = rng.random_range(1..=2);
            params.gap_ms = rng.random_range(100.0..140.0);
            word.start
        }
        Category::Prolongation => {
            params.factor = rng.random_range(2.5..4.0);
            rng.random_range(word)
        }
        Category::BlockSilent => {
            params.duration_ms = rng.random_range(300.0..600.0);
            word.start
        }
        Category::BlockAudible => {
            params.duration_ms = rng.random_range(200.0..350.0);
            params.noise_rms = rng.random_range(0.02..0.04);
            rng.random_range(word)
        }
        Category::Atypical => return None,
    };
    Some(Injection { category: cat, position, params })
}

/// Per-phone MFCC templates from 0.5 s renderings of each voice.
pub fn synthetic_templates(
    inv: &PhonemeInventory,
    voices: &VoiceMap,
    cfg: &FrontendConfig,
    sample_rate: u32,
) -> Result<TemplateSet, SynthError> {
    let n = (0.5 * sample_rate as f64) as usize;
    let mut templates = Vec::with_capacity(inv.len());
    for e in inv.entries() {
        let voice = voices.get(&e.symbol).ok_or_else(|| SynthError::MissingVoice(e.symbol.clone()))?;
        let audio = AudioBuffer::new(voice.render(n, sample_rate), sample_rate)?;
        let m = mfcc(&mel_spectrogram(&audio, cfg)?, cfg)?;
        let rows = m.data.slice(s![1..m.frames().saturating_sub(1).max(2), ..]);
        let mean = rows.mean_axis(ndarray::Axis(0)).expect("non-empty");
        templates.push(mean.to_vec());
    }
    Ok(TemplateSet::new(templates, DEFAULT_TEMPLATE_TEMPERATURE, DEFAULT_BLANK_PRIOR))
}

/// One line of the corpus manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub seed: u64,
    pub transcript: String,
    pub audio: PathBuf,
    pub gold: PathBuf,
    pub spec: SynthesisSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseFiles {
    pub audio: PathBuf,
    pub gold: PathBuf,
    pub entry: ManifestEntry,
}

/// Writes `case_<seed>.wav` and `case_<seed>.gold.json` into `dir` and
/// appends the case to `dir/manifest.jsonl`.
pub fn write_case(
    dir: impl AsRef<Path>,
    spec: &SynthesisSpec,
    case: &SyntheticCase,
) -> Result<CaseFiles, SynthError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let audio = dir.join(format!("case_{}.wav", spec.seed));
    let gold = dir.join(format!("case_{}.gold.json", spec.seed));
    write_wav(&audio, &case.audio)?;
    std::fs::write(&gold, serde_json::to_string_pretty(&case.gold)?)?;
    let entry = ManifestEntry {
        seed: spec.seed,
        transcript: case.transcript.source_text.clone(),
        audio: audio.clone(),
        gold: gold.clone(),
        spec: spec.clone(),
    };
    let mut manifest = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(dir.join("manifest.jsonl"))?;
    writeln!(manifest, "{}", serde_json::to_string(&entry)?)?;
    Ok(CaseFiles { audio, gold, entry })
}

/// Convenience wrapper generating the random case for `seed`.
pub fn random_case(
    seed: u64,
    inv: &PhonemeInventory,
    cfg: &FrontendConfig,
) -> Result<(SynthesisSpec, SyntheticCase), SynthError> {
    let spec = random_spec(seed, inv, &CategoryPriors::default());
    let case = generate_synthetic_case(&spec, inv, cfg)?;
    Ok((spec, case))
}
