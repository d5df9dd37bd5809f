use serde::{Deserialize, Serialize};

use super::FrontendError;

/// Frontend parameters. Serialized as a flat JSON object with these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontendConfig {
    pub n_fft: usize,
    pub hop: usize,
    /// Lower bound of the pitch search range (Hz).
    pub f_min: f64,
    /// Upper bound of the pitch search range (Hz).
    pub f_max: f64,
    /// Energy window length in samples.
    pub win_size: usize,
    pub n_mels: usize,
    pub n_coef: usize,
    /// Natural-log floor applied to mel power.
    pub log_floor: f64,
    /// Minimum normalized autocorrelation peak for a frame to count as voiced.
    pub voicing_threshold: f64,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            n_fft: 2048,
            hop: 256,
            f_min: 75.0,
            f_max: 500.0,
            win_size: 1024,
            n_mels: 80,
            n_coef: 13,
            log_floor: (1e-10f64).ln(),
            voicing_threshold: 0.3,
        }
    }
}

impl FrontendConfig {
    /// 32 ms window with an 8 ms hop at 16 kHz (`n_fft` 512, `hop` 128,
    /// `win_size` 400); resolves phones of 100 ms and shorter.
    pub fn short_window() -> Self {
        Self {
            n_fft: 512,
            hop: 128,
            win_size: 400,
            ..Self::default()
        }
    }

    /// Checks the config against a concrete sample rate.
    pub fn validate(&self, sample_rate: u32) -> Result<(), FrontendError> {
        let bad = |msg: String| Err(FrontendError::InvalidConfig(msg));
        if self.hop == 0 || self.hop > self.n_fft {
            return bad(format!("hop {} must be in (0, n_fft={}]", self.hop, self.n_fft));
        }
        let nyquist = sample_rate as f64 / 2.0;
        if !(self.f_min > 0.0 && self.f_min < self.f_max && self.f_max < nyquist) {
            return bad(format!(
                "need 0 < f_min ({}) < f_max ({}) < {nyquist}",
                self.f_min, self.f_max
            ));
        }
        if self.win_size == 0 {
            return bad("win_size must be positive".into());
        }
        if self.n_mels == 0 || self.n_coef == 0 || self.n_coef > self.n_mels {
            return bad(format!(
                "need 0 < n_coef ({}) <= n_mels ({})",
                self.n_coef, self.n_mels
            ));
        }
        if !self.log_floor.is_finite() {
            return bad("log_floor must be finite".into());
        }
        if !(0.0..=1.0).contains(&self.voicing_threshold) {
            return bad("voicing_threshold must be in [0, 1]".into());
        }
        Ok(())
    }

    /// Number of frames on the shared grid, or `TooShort`.
    pub fn frame_count(&self, n_samples: usize) -> Result<usize, FrontendError> {
        let required = self.n_fft.max(self.win_size);
        if n_samples < required {
            return Err(FrontendError::TooShort {
                samples: n_samples,
                required,
            });
        }
        Ok((n_samples - self.n_fft) / self.hop + 1)
    }
}
