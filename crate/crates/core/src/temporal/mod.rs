//! Forward inference for the temporal stack: a gated recurrent pass over the
//! aligned frames, a multi-head self-attention stack, and a fusion projection
//! of the two.
//!
//! Weights are stored as `f32` in a flat binary file (see [`WeightBundle`]);
//! all arithmetic runs in `f64`.

mod attention;
mod fusion;
mod recurrent;
mod weights;

pub use attention::{global_attention_pass, AttentionTrace};
pub use fusion::fuse;
pub use recurrent::local_recurrent_pass;
pub use weights::{Tensor, TemporalConfig, WeightBundle, WEIGHT_MAGIC, WEIGHT_VERSION};

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemporalError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("frame count mismatch: {0} vs {1}")]
    FrameCountMismatch(usize, usize),
    #[error("missing tensor {0}")]
    MissingTensor(String),
    #[error("bad weight file: {0}")]
    BadWeights(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Local,
    Global,
    Fused,
}

/// Frame-major hidden states.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenSeq {
    pub data: Array2<f64>,
    pub origin: Origin,
}

impl HiddenSeq {
    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    /// Mean over frames `start..end` (clamped to the sequence).
    pub fn pool(&self, start: usize, end: usize) -> Array1<f64> {
        let end = end.min(self.frames());
        let start = start.min(end.saturating_sub(1));
        self.data
            .slice(ndarray::s![start..end.max(start + 1), ..])
            .mean_axis(Axis(0))
            .unwrap_or_else(|| Array1::zeros(self.dim()))
    }
}

/// The three outputs of a full temporal pass.
#[derive(Debug, Clone)]
pub struct MultiScale {
    pub local: HiddenSeq,
    pub global: HiddenSeq,
    pub fused: HiddenSeq,
}

/// Open-set centroid and distance scale.
#[derive(Debug, Clone)]
pub struct OpenSet {
    centroid: Array1<f64>,
    scale: f64,
}

impl OpenSet {
    pub fn new(w: &WeightBundle) -> Result<Self, TemporalError> {
        let scale = w.scalar("open_set.scale")?;
        if scale <= 0.0 {
            return Err(TemporalError::BadWeights("open_set.scale must be positive".into()));
        }
        Ok(Self {
            centroid: w.vector("open_set.centroid")?,
            scale,
        })
    }

    /// 0 at the centroid, rising towards 1 with distance (`1 - exp(-d / scale)`).
    pub fn atypicality(&self, pooled: &Array1<f64>) -> Result<f64, TemporalError> {
        if self.centroid.len() != pooled.len() {
            return Err(TemporalError::ShapeMismatch(format!(
                "centroid has {} dims, pooled state {}",
                self.centroid.len(),
                pooled.len()
            )));
        }
        let d = (pooled - &self.centroid).mapv(|v| v * v).sum().sqrt();
        Ok(1.0 - (-d / self.scale).exp())
    }
}

/// A weight bundle converted to `f64` matrices once, for repeated passes.
#[derive(Debug, Clone)]
pub struct TemporalModel {
    lstm: recurrent::Lstm,
    attention: attention::AttentionStack,
    fusion: fusion::Fusion,
    open_set: OpenSet,
}

impl TemporalModel {
    pub fn new(w: &WeightBundle) -> Result<Self, TemporalError> {
        Ok(Self {
            lstm: recurrent::Lstm::new(w)?,
            attention: attention::AttentionStack::new(w)?,
            fusion: fusion::Fusion::new(w)?,
            open_set: OpenSet::new(w)?,
        })
    }

    pub fn run(&self, input: &Array2<f64>) -> Result<MultiScale, TemporalError> {
        let local = self.lstm.run(input)?;
        let (global, _) = self.attention.run(input, false)?;
        let fused = self.fusion.run(&local, &global)?;
        Ok(MultiScale { local, global, fused })
    }

    pub fn open_set(&self) -> &OpenSet {
        &self.open_set
    }
}

/// Runs recurrent, attention and fusion passes over the same input.
pub fn run_temporal(input: &Array2<f64>, w: &WeightBundle) -> Result<MultiScale, TemporalError> {
    TemporalModel::new(w)?.run(input)
}

/// Atypicality of a pooled representation under the bundle's open-set centroid.
pub fn centroid_atypicality(pooled: &Array1<f64>, w: &WeightBundle) -> Result<f64, TemporalError> {
    OpenSet::new(w)?.atypicality(pooled)
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
