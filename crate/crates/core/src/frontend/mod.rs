//! Multi-scale acoustic features on a shared frame grid.
//!
//! Every extractor frames the signal identically: frame `i` covers samples
//! `[i * hop, i * hop + n_fft)`, with `floor((N - n_fft) / hop) + 1` frames and
//! no padding. Channel-wise concatenation of the extractors is therefore
//! always well defined.

mod audio;
mod config;
mod energy;
mod features;
mod mel;
mod mfcc;
mod pitch;

pub use audio::{load_audio, load_audio_bytes, write_wav, AudioBuffer};
pub use config::FrontendConfig;
pub use energy::energy_contour;
pub use features::{combine_features, FeatureGroup, FeatureMatrix, FrameClock};
pub use mel::{hz_to_mel, mel_filterbank, mel_spectrogram, mel_to_hz, MelAnalyzer};
pub use mfcc::{dct_matrix, mfcc};
pub use pitch::pitch_track;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt audio file: {0}")]
    CorruptFile(String),
    #[error("audio too short: {samples} samples, need at least {required}")]
    TooShort { samples: usize, required: usize },
    #[error("channel mismatch: expected {expected} channels, got {actual}")]
    ChannelMismatch { expected: usize, actual: usize },
    #[error("frame count mismatch: {0} vs {1}")]
    FrameCountMismatch(usize, usize),
    #[error("invalid frontend config: {0}")]
    InvalidConfig(String),
    #[error("invalid audio: {0}")]
    InvalidAudio(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// All four feature streams plus their concatenation.
#[derive(Debug, Clone)]
pub struct FeatureStack {
    pub mel: FeatureMatrix,
    pub pitch: FeatureMatrix,
    pub energy: FeatureMatrix,
    pub mfcc: FeatureMatrix,
    pub combined: FeatureMatrix,
}

/// Runs every extractor and concatenates them in mel, pitch, energy, mfcc order.
pub fn extract_features(
    x: &AudioBuffer,
    cfg: &FrontendConfig,
) -> Result<FeatureStack, FrontendError> {
    let mel = mel_spectrogram(x, cfg)?;
    let pitch = pitch_track(x, cfg)?;
    let energy = energy_contour(x, cfg)?;
    let mfcc = mfcc(&mel, cfg)?;
    let combined = combine_features(&[mel.clone(), pitch.clone(), energy.clone(), mfcc.clone()])?;
    Ok(FeatureStack {
        mel,
        pitch,
        energy,
        mfcc,
        combined,
    })
}
