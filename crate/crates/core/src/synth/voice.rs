use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::alignment::PhonemeInventory;
use crate::frontend::{hz_to_mel, mel_to_hz};

/// Tone-complex parameters for one phone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Voice {
    /// Fundamental frequency in Hz.
    pub f0: f64,
    /// Spectral peaks shaping the harmonic amplitudes, in Hz.
    pub formants: Vec<f64>,
    /// Target RMS amplitude.
    pub rms: f64,
}

/// Symbol -> tone parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VoiceMap(pub BTreeMap<String, Voice>);

const FORMANT_BW_HZ: f64 = 150.0;
const FORMANT_LO_HZ: f64 = 300.0;
const FORMANT_HI_HZ: f64 = 3500.0;
const F0_BASE_HZ: f64 = 100.0;
const F0_SPAN_HZ: f64 = 150.0;
const FADE_S: f64 = 0.005;

impl VoiceMap {
    /// Deterministic voices with a distinct fundamental per symbol.
    ///
    /// Formant pairs are drawn from a mel-spaced grid so that every phone
    /// has its own spectral envelope.
    pub fn for_inventory(inv: &PhonemeInventory) -> Self {
        let n = inv.len().max(1);
        let (lo, hi) = (hz_to_mel(FORMANT_LO_HZ), hz_to_mel(FORMANT_HI_HZ));
        let grid = |i: usize| mel_to_hz(lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64);
        let step = (F0_SPAN_HZ / n as f64).min(15.0);
        let voices = inv
            .entries()
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let voice = Voice {
                    f0: F0_BASE_HZ + step * k as f64,
                    formants: vec![grid(k), grid((k + n / 2) % n)],
                    rms: 0.12,
                };
                (e.symbol.clone(), voice)
            })
            .collect();
        Self(voices)
    }

    pub fn get(&self, symbol: &str) -> Option<&Voice> {
        self.0.get(symbol)
    }
}

impl Voice {
    /// Harmonic tone complex of `n` samples with short raised-cosine fades.
    pub fn render(&self, n: usize, sample_rate: u32) -> Vec<f64> {
        let sr = sample_rate as f64;
        let top = (0.45 * sr).min(5000.0);
        let mut amps = Vec::new();
        let mut h = 1;
        while h as f64 * self.f0 < top {
            let f = h as f64 * self.f0;
            let peak: f64 = self
                .formants
                .iter()
                .map(|&fm| (-0.5 * ((f - fm) / FORMANT_BW_HZ).powi(2)).exp())
                .sum();
            amps.push(peak + 0.05 / h as f64);
            h += 1;
        }
        let mut x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / sr;
                amps.iter()
                    .enumerate()
                    .map(|(k, a)| a * (2.0 * PI * (k + 1) as f64 * self.f0 * t + 0.7 * k as f64).sin())
                    .sum()
            })
            .collect();
        normalize_rms(&mut x, self.rms);
        fade(&mut x, sample_rate);
        x
    }
}

/// Gaussian white noise at the given RMS, faded like a phone.
pub fn render_noise<R: Rng>(n: usize, rms: f64, sample_rate: u32, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut x: Vec<f64> = (0..n).map(|_| normal.sample(rng)).collect();
    normalize_rms(&mut x, rms);
    fade(&mut x, sample_rate);
    x
}

fn normalize_rms(x: &mut [f64], rms: f64) {
    if x.is_empty() {
        return;
    }
    let cur = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    if cur > 0.0 {
        x.iter_mut().for_each(|v| *v *= rms / cur);
    }
}

fn fade(x: &mut [f64], sample_rate: u32) {
    let n = ((FADE_S * sample_rate as f64) as usize).min(x.len() / 2);
    for i in 0..n {
        let g = 0.5 - 0.5 * (PI * i as f64 / n as f64).cos();
        x[i] *= g;
        let j = x.len() - 1 - i;
        x[j] *= g;
    }
}
