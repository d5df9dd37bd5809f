use std::sync::Arc;

use ndarray::Array2;
use rustfft::{num_complex::Complex, Fft, FftPlanner};

use super::{AudioBuffer, FeatureMatrix, FrontendConfig, FrontendError};

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filterbank (`n_mels x (n_fft/2 + 1)`), peak-normalized, with
/// band edges spaced evenly on the mel scale between 0 Hz and Nyquist.
pub fn mel_filterbank(n_mels: usize, n_fft: usize, sample_rate: u32) -> Array2<f64> {
    let n_bins = n_fft / 2 + 1;
    let nyquist = sample_rate as f64 / 2.0;
    let top = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(top * i as f64 / (n_mels + 1) as f64))
        .collect();
    Array2::from_shape_fn((n_mels, n_bins), |(m, k)| {
        let f = k as f64 * sample_rate as f64 / n_fft as f64;
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let rising = (f - lo) / (center - lo);
        let falling = (hi - f) / (hi - center);
        rising.min(falling).max(0.0)
    })
}

/// Periodic Hann window.
pub(crate) fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Reusable log-mel analyzer for one config and sample rate.
pub struct MelAnalyzer {
    cfg: FrontendConfig,
    sample_rate: u32,
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    filterbank: Array2<f64>,
}

impl MelAnalyzer {
    pub fn new(cfg: &FrontendConfig, sample_rate: u32) -> Result<Self, FrontendError> {
        cfg.validate(sample_rate)?;
        let fft = FftPlanner::new().plan_fft_forward(cfg.n_fft);
        Ok(Self {
            cfg: cfg.clone(),
            sample_rate,
            fft,
            window: hann(cfg.n_fft),
            filterbank: mel_filterbank(cfg.n_mels, cfg.n_fft, sample_rate),
        })
    }

    pub fn filterbank(&self) -> &Array2<f64> {
        &self.filterbank
    }

    pub fn run(&self, x: &AudioBuffer) -> Result<FeatureMatrix, FrontendError> {
        if x.sample_rate() != self.sample_rate {
            return Err(FrontendError::InvalidConfig(format!(
                "analyzer built for {} Hz, got {} Hz",
                self.sample_rate,
                x.sample_rate()
            )));
        }
        let cfg = &self.cfg;
        let frames = cfg.frame_count(x.len())?;
        let n_bins = cfg.n_fft / 2 + 1;
        let floor = cfg.log_floor.exp();
        let samples = x.samples();

        let mut data = Array2::zeros((frames, cfg.n_mels));
        let mut buf = vec![Complex::new(0.0, 0.0); cfg.n_fft];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut power = vec![0.0; n_bins];
        for f in 0..frames {
            let start = f * cfg.hop;
            for (i, slot) in buf.iter_mut().enumerate() {
                *slot = Complex::new(samples[start + i] * self.window[i], 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p = c.norm_sqr();
            }
            let mut row = data.row_mut(f);
            for (m, out) in row.iter_mut().enumerate() {
                let weights = self.filterbank.row(m);
                let e: f64 = weights.iter().zip(&power).map(|(w, p)| w * p).sum();
                *out = e.max(floor).ln();
            }
        }
        let labels = (0..cfg.n_mels).map(|i| format!("mel_{i}")).collect();
        FeatureMatrix::new(
            data,
            self.sample_rate as f64 / cfg.hop as f64,
            labels,
        )
    }
}

/// Log-mel spectrogram on the shared frame grid (Hann window, no padding).
pub fn mel_spectrogram(x: &AudioBuffer, cfg: &FrontendConfig) -> Result<FeatureMatrix, FrontendError> {
    MelAnalyzer::new(cfg, x.sample_rate())?.run(x)
}
