//! Interpretable dysfluency analysis engine.
//!
//! The pipeline runs in stages, each exposed as its own module:
//!
//! ```text
//! WAV -> frontend (mel, pitch, energy, MFCC)
//!     -> alignment (posteriors, CTC forced alignment, refinement, edit ops)
//!     -> temporal (optional recurrent/attention forward pass)
//!     -> classifier (canonical + open-set scoring, calibration, thresholds)
//!     -> report (persisted JSON, SVG alignment maps, HTTP service)
//! ```
//!
//! `synth` generates tone-complex utterances with exact ground truth and
//! `eval` computes the detection, alignment and agreement metrics used to
//! check the engine against them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alignment;
pub mod classifier;
pub mod eval;
pub mod frontend;
pub mod report;
pub mod service;
pub mod synth;
pub mod temporal;

pub use alignment::{
    AlignmentPath, EditKind, ExpectedTranscript, PhonemeEditOp, PhonemeInventory, Posteriorgram,
};
pub use classifier::{Category, DysfluencyEvent, Thresholds};
pub use frontend::{AudioBuffer, FeatureMatrix, FrontendConfig};
pub use report::{AnalysisConfig, AnalysisReport, Analyzer, ReportEngine, ReportError, ReportStore};

