use ndarray::{concatenate, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{FrontendConfig, FrontendError};

/// Frames x channels feature matrix with named channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: Array2<f64>,
    pub frame_rate: f64,
    pub channel_labels: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        data: Array2<f64>,
        frame_rate: f64,
        channel_labels: Vec<String>,
    ) -> Result<Self, FrontendError> {
        if data.ncols() != channel_labels.len() {
            return Err(FrontendError::ChannelMismatch {
                expected: channel_labels.len(),
                actual: data.ncols(),
            });
        }
        Ok(Self {
            data,
            frame_rate,
            channel_labels,
        })
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.channel_labels.iter().position(|l| l == label)
    }

    /// Indices of the channels belonging to a feature group.
    pub fn group_channels(&self, group: FeatureGroup) -> Vec<usize> {
        self.channel_labels
            .iter()
            .enumerate()
            .filter(|(_, l)| FeatureGroup::of_label(l) == Some(group))
            .map(|(i, _)| i)
            .collect()
    }

    /// Sub-matrix with only the channels of `group`, in order.
    pub fn select_group(&self, group: FeatureGroup) -> Option<FeatureMatrix> {
        let idx = self.group_channels(group);
        if idx.is_empty() {
            return None;
        }
        let data = self.data.select(Axis(1), &idx);
        let labels = idx.iter().map(|&i| self.channel_labels[i].clone()).collect();
        Some(FeatureMatrix {
            data,
            frame_rate: self.frame_rate,
            channel_labels: labels,
        })
    }

    /// Copy with every channel of `group` replaced by its utterance mean.
    pub fn neutralized(&self, group: FeatureGroup) -> FeatureMatrix {
        let mut out = self.clone();
        for c in self.group_channels(group) {
            let mut col = out.data.column_mut(c);
            let mean = col.mean().unwrap_or(0.0);
            col.fill(mean);
        }
        out
    }
}

/// Channel groups used for attribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Mel,
    Pitch,
    Energy,
    Mfcc,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 4] = [
        FeatureGroup::Mel,
        FeatureGroup::Pitch,
        FeatureGroup::Energy,
        FeatureGroup::Mfcc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::Mel => "mel",
            FeatureGroup::Pitch => "pitch",
            FeatureGroup::Energy => "energy",
            FeatureGroup::Mfcc => "mfcc",
        }
    }

    pub fn of_label(label: &str) -> Option<FeatureGroup> {
        if label.starts_with("mel_") {
            Some(FeatureGroup::Mel)
        } else if label == "pitch_hz" || label == "voiced_flag" {
            Some(FeatureGroup::Pitch)
        } else if label == "energy_db" {
            Some(FeatureGroup::Energy)
        } else if label.starts_with("mfcc_") {
            Some(FeatureGroup::Mfcc)
        } else {
            None
        }
    }
}

/// Channel-wise concatenation. All parts must share frame count and frame rate.
pub fn combine_features(parts: &[FeatureMatrix]) -> Result<FeatureMatrix, FrontendError> {
    let first = parts
        .first()
        .ok_or_else(|| FrontendError::InvalidConfig("no feature parts to combine".into()))?;
    for p in &parts[1..] {
        if p.frames() != first.frames() {
            return Err(FrontendError::FrameCountMismatch(first.frames(), p.frames()));
        }
        if (p.frame_rate - first.frame_rate).abs() > 1e-9 {
            return Err(FrontendError::InvalidConfig(format!(
                "frame rate mismatch: {} vs {}",
                first.frame_rate, p.frame_rate
            )));
        }
    }
    let views: Vec<_> = parts.iter().map(|p| p.data.view()).collect();
    let data = concatenate(Axis(1), &views).expect("row counts checked above");
    let labels = parts
        .iter()
        .flat_map(|p| p.channel_labels.iter().cloned())
        .collect();
    FeatureMatrix::new(data, first.frame_rate, labels)
}

/// Maps frame indices on the shared grid to time.
///
/// Frame `i` is centred at sample `i * hop + n_fft / 2` and nominally owns
/// the `hop`-sample interval around that centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameClock {
    pub hop: usize,
    pub n_fft: usize,
    pub win_size: usize,
    pub sample_rate: u32,
}

impl FrameClock {
    pub fn new(cfg: &FrontendConfig, sample_rate: u32) -> Self {
        Self {
            hop: cfg.hop,
            n_fft: cfg.n_fft,
            win_size: cfg.win_size,
            sample_rate,
        }
    }

    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.hop as f64
    }

    pub fn frame_ms(&self) -> f64 {
        1000.0 * self.hop as f64 / self.sample_rate as f64
    }

    pub fn center_s(&self, frame: usize) -> f64 {
        (frame * self.hop + self.n_fft / 2) as f64 / self.sample_rate as f64
    }

    /// Start of the interval owned by `frame`; also the end of `frame - 1`.
    pub fn boundary_s(&self, frame: usize) -> f64 {
        (frame as f64 * self.hop as f64 + self.n_fft as f64 / 2.0 - self.hop as f64 / 2.0)
            .max(0.0)
            / self.sample_rate as f64
    }

    /// Time span of frames `[start, end)`.
    pub fn span_s(&self, start: usize, end: usize) -> (f64, f64) {
        (self.boundary_s(start), self.boundary_s(end))
    }

    /// Frame whose centre is nearest to `t` seconds (clamped to `frames`).
    pub fn frame_at(&self, t: f64, frames: usize) -> usize {
        let pos = (t * self.sample_rate as f64 - self.n_fft as f64 / 2.0) / self.hop as f64;
        (pos.round().max(0.0) as usize).min(frames.saturating_sub(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn matrix(frames: usize, labels: &[&str]) -> FeatureMatrix {
        FeatureMatrix::new(
            Array2::from_shape_fn((frames, labels.len()), |(r, c)| (r * 10 + c) as f64),
            62.5,
            labels.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn channel_counts_add() {
        let mel: Vec<String> = (0..80).map(|i| format!("mel_{i}")).collect();
        let mel: Vec<&str> = mel.iter().map(String::as_str).collect();
        let mfcc: Vec<String> = (0..13).map(|i| format!("mfcc_{i}")).collect();
        let mfcc: Vec<&str> = mfcc.iter().map(String::as_str).collect();
        let out = combine_features(&[
            matrix(5, &mel),
            matrix(5, &["pitch_hz", "voiced_flag"]),
            matrix(5, &["energy_db"]),
            matrix(5, &mfcc),
        ])
        .unwrap();
        assert_eq!(out.channels(), 96);
        assert_eq!(out.group_channels(FeatureGroup::Pitch), vec![80, 81]);
    }

    #[test]
    fn single_part_is_identity() {
        let m = matrix(4, &["energy_db"]);
        assert_eq!(combine_features(std::slice::from_ref(&m)).unwrap(), m);
    }

    #[test]
    fn frame_mismatch_rejected() {
        let r = combine_features(&[matrix(55, &["energy_db"]), matrix(54, &["pitch_hz"])]);
        assert!(matches!(r, Err(FrontendError::FrameCountMismatch(55, 54))));
    }

    #[test]
    fn neutralize_sets_group_to_mean() {
        let m = matrix(4, &["energy_db", "pitch_hz"]);
        let n = m.neutralized(FeatureGroup::Energy);
        assert!(n.data.column(0).iter().all(|&v| v == 15.0));
        assert_eq!(n.data.column(1), m.data.column(1));
    }

    #[test]
    fn clock_spans_tile() {
        let clock = FrameClock::new(&FrontendConfig::default(), 16000);
        let (_, e) = clock.span_s(0, 3);
        let (s, _) = clock.span_s(3, 5);
        assert_eq!(e, s);
        assert!((clock.frame_ms() - 16.0).abs() < 1e-12);
        assert_eq!(clock.frame_at(clock.center_s(7), 100), 7);
    }
}
