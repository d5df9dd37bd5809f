use ndarray::Array2;

use super::{AudioBuffer, FeatureMatrix, FrontendConfig, FrontendError};

pub const ENERGY_FLOOR_DB: f64 = -100.0;

/// RMS level in dB over a rectangular `win_size` window centred on each frame,
/// floored at -100 dB.
pub fn energy_contour(x: &AudioBuffer, cfg: &FrontendConfig) -> Result<FeatureMatrix, FrontendError> {
    cfg.validate(x.sample_rate())?;
    let frames = cfg.frame_count(x.len())?;
    let samples = x.samples();
    let mut prefix = Vec::with_capacity(samples.len() + 1);
    prefix.push(0.0);
    for &s in samples {
        prefix.push(prefix.last().unwrap() + s * s);
    }

    let half = cfg.win_size / 2;
    let mut data = Array2::zeros((frames, 1));
    for f in 0..frames {
        let center = f * cfg.hop + cfg.n_fft / 2;
        let lo = center.saturating_sub(half);
        let hi = (lo + cfg.win_size).min(samples.len());
        // Summing squares directly keeps constant signals exact; prefix sums
        // are only used for the silence check.
        let mean_sq = if prefix[hi] - prefix[lo] == 0.0 {
            0.0
        } else {
            samples[lo..hi].iter().map(|s| s * s).sum::<f64>() / (hi - lo) as f64
        };
        data[[f, 0]] = to_db(mean_sq.sqrt());
    }
    FeatureMatrix::new(
        data,
        x.sample_rate() as f64 / cfg.hop as f64,
        vec!["energy_db".into()],
    )
}

fn to_db(rms: f64) -> f64 {
    if rms <= 0.0 {
        ENERGY_FLOOR_DB
    } else {
        (20.0 * rms.log10()).max(ENERGY_FLOOR_DB)
    }
}
