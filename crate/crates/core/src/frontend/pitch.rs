use ndarray::Array2;

use super::{AudioBuffer, FeatureMatrix, FrontendConfig, FrontendError};

/// A peak must reach this fraction of the strongest peak to be chosen; the
/// smallest qualifying lag wins, which suppresses octave-down errors.
const PEAK_RATIO: f64 = 0.9;

/// Autocorrelation pitch tracker.
///
/// Each frame uses the `n_fft` samples of the shared grid. The normalized
/// autocorrelation is searched over lags `[sr / f_max, sr / f_min]`; the peak
/// is refined by parabolic interpolation. Frames whose best peak falls below
/// `voicing_threshold` are unvoiced (`pitch_hz = 0`, `voiced_flag = 0`).
pub fn pitch_track(x: &AudioBuffer, cfg: &FrontendConfig) -> Result<FeatureMatrix, FrontendError> {
    cfg.validate(x.sample_rate())?;
    let frames = cfg.frame_count(x.len())?;
    let sr = x.sample_rate() as f64;
    let lag_min = (sr / cfg.f_max).ceil() as usize;
    let lag_max = ((sr / cfg.f_min).floor() as usize).min(cfg.n_fft.saturating_sub(2));

    let mut data = Array2::zeros((frames, 2));
    for f in 0..frames {
        let start = f * cfg.hop;
        let frame = &x.samples()[start..start + cfg.n_fft];
        if let Some(hz) = frame_pitch(frame, sr, lag_min, lag_max, cfg) {
            data[[f, 0]] = hz;
            data[[f, 1]] = 1.0;
        }
    }
    FeatureMatrix::new(
        data,
        sr / cfg.hop as f64,
        vec!["pitch_hz".into(), "voiced_flag".into()],
    )
}

fn frame_pitch(
    frame: &[f64],
    sr: f64,
    lag_min: usize,
    lag_max: usize,
    cfg: &FrontendConfig,
) -> Option<f64> {
    if lag_min < 2 || lag_max <= lag_min {
        return None;
    }
    let n = frame.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &s in frame {
        prefix.push(prefix.last().unwrap() + s * s);
    }
    let nacf = |lag: usize| -> f64 {
        let head = prefix[n - lag];
        let tail = prefix[n] - prefix[lag];
        let denom = (head * tail).sqrt();
        if denom <= 1e-12 {
            return 0.0;
        }
        let cross: f64 = frame[..n - lag]
            .iter()
            .zip(&frame[lag..])
            .map(|(a, b)| a * b)
            .sum();
        cross / denom
    };

    // r[i] holds the lag lag_min - 1 + i, so peaks at both range ends can be tested.
    let r: Vec<f64> = (lag_min - 1..=lag_max + 1).map(nacf).collect();
    let peaks: Vec<(usize, f64)> = (1..r.len() - 1)
        .filter(|&i| r[i] >= r[i - 1] && r[i] > r[i + 1] && r[i] >= cfg.voicing_threshold)
        .map(|i| (i, r[i]))
        .collect();
    let best = peaks.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    let &(i, _) = peaks.iter().find(|&&(_, v)| v >= PEAK_RATIO * best)?;

    let (a, b, c) = (r[i - 1], r[i], r[i + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 1e-12 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let lag = (lag_min - 1 + i) as f64 + shift;
    Some((sr / lag).clamp(cfg.f_min, cfg.f_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64) -> AudioBuffer {
        let s = (0..16000)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * freq * i as f64 / 16000.0).sin())
            .collect();
        AudioBuffer::new(s, 16000).unwrap()
    }

    #[test]
    fn tracks_220_hz() {
        let p = pitch_track(&tone(220.0), &FrontendConfig::default()).unwrap();
        for row in p.data.rows() {
            assert_eq!(row[1], 1.0);
            assert!((row[0] - 220.0).abs() <= 2.0, "got {}", row[0]);
        }
    }

    #[test]
    fn silence_is_unvoiced() {
        let x = AudioBuffer::new(vec![0.0; 16000], 16000).unwrap();
        let p = pitch_track(&x, &FrontendConfig::default()).unwrap();
        assert!(p.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn never_reports_below_range() {
        let p = pitch_track(&tone(60.0), &FrontendConfig::default()).unwrap();
        for row in p.data.rows() {
            if row[1] == 1.0 {
                assert!(row[0] >= 75.0 && row[0] <= 500.0);
            } else {
                assert_eq!(row[0], 0.0);
            }
        }
    }
}
