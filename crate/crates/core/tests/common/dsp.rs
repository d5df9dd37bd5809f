//! Direct-summation reference for the spectral frontend.

use std::f64::consts::PI;

/// Log-mel frames computed with an explicit DFT, an independently built
/// triangular filterbank and the same framing rule as the library.
pub struct NaiveFrontend {
    n_fft: usize,
    hop: usize,
    log_floor: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    window: Vec<f64>,
    bank: Vec<Vec<f64>>,
}

impl NaiveFrontend {
    pub fn new(n_fft: usize, hop: usize, n_mels: usize, sample_rate: f64, log_floor: f64) -> Self {
        let cos = (0..n_fft).map(|i| (2.0 * PI * i as f64 / n_fft as f64).cos()).collect();
        let sin = (0..n_fft).map(|i| (2.0 * PI * i as f64 / n_fft as f64).sin()).collect();
        let window = (0..n_fft)
            .map(|i| (PI * i as f64 / n_fft as f64).sin().powi(2))
            .collect();

        let mel = |hz: f64| 1127.0 * (hz / 700.0).ln_1p();
        let inv_mel = |m: f64| 700.0 * ((m / 1127.0).exp() - 1.0);
        let top = mel(sample_rate / 2.0);
        let points: Vec<f64> = (0..=n_mels + 1)
            .map(|i| inv_mel(i as f64 * top / (n_mels as f64 + 1.0)))
            .collect();
        let bank = (0..n_mels)
            .map(|m| {
                (0..=n_fft / 2)
                    .map(|k| {
                        let f = k as f64 * sample_rate / n_fft as f64;
                        if f <= points[m] || f >= points[m + 2] {
                            0.0
                        } else if f <= points[m + 1] {
                            (f - points[m]) / (points[m + 1] - points[m])
                        } else {
                            (points[m + 2] - f) / (points[m + 2] - points[m + 1])
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            n_fft,
            hop,
            log_floor,
            cos,
            sin,
            window,
            bank,
        }
    }

    pub fn log_mel(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n_fft;
        let mut out = Vec::new();
        let mut start = 0;
        while start + n <= x.len() {
            let frame: Vec<f64> = (0..n).map(|i| x[start + i] * self.window[i]).collect();
            let power: Vec<f64> = (0..=n / 2)
                .map(|k| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (i, &v) in frame.iter().enumerate() {
                        let idx = (k * i) % n;
                        re += v * self.cos[idx];
                        im -= v * self.sin[idx];
                    }
                    re * re + im * im
                })
                .collect();
            out.push(
                self.bank
                    .iter()
                    .map(|w| {
                        let e: f64 = w.iter().zip(&power).map(|(a, b)| a * b).sum();
                        e.max(self.log_floor.exp()).ln()
                    })
                    .collect(),
            );
            start += self.hop;
        }
        out
    }
}

/// Orthonormal DCT-II by direct summation.
pub fn naive_dct(v: &[f64], n_coef: usize) -> Vec<f64> {
    let n = v.len() as f64;
    (0..n_coef)
        .map(|k| {
            let s: f64 = v
                .iter()
                .enumerate()
                .map(|(i, &x)| x * (PI / n * (i as f64 + 0.5) * k as f64).cos())
                .sum();
            s * if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() }
        })
        .collect()
}

/// `|a - b| <= tol * max(1, |b|)`: relative, with an absolute floor near zero.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
