//! Phoneme posteriors, CTC forced alignment, boundary refinement and
//! phoneme-level edit operations.

mod ctc;
mod decode;
mod edits;
mod encoder;
mod inventory;
mod path;
mod posteriorgram;
mod refine;
mod transcript;

pub use ctc::{ctc_forced_align, ctc_min_frames, log_prob, LOG_ZERO, TIE_EPS};
pub use decode::{decode_realized, DecodeOptions};
pub use edits::{classify_edit_ops, levenshtein_ops, settle_insertions, EditKind, EditOpConfig, EditStep, PhonemeEditOp};
pub use encoder::{phoneme_posteriors, EncoderSource, TemplateSet, DEFAULT_BLANK_PRIOR};
pub use inventory::{PhoneClass, PhoneEntry, PhonemeInventory};
pub use path::{fill_blanks, AlignmentPath, Segment};
pub use posteriorgram::Posteriorgram;
pub use refine::{refine_alignment, DEFAULT_REFINE_WINDOW};
pub use transcript::ExpectedTranscript;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlignmentError {
    #[error("features lack required channels: {0}")]
    MissingChannels(String),
    #[error("templates cover {templates} symbols but the inventory has {inventory}")]
    TemplateInventoryMismatch { templates: usize, inventory: usize },
    #[error("bad external posteriorgram: {0}")]
    BadExternalFile(String),
    #[error("transcript needs at least {required} frames, posteriorgram has {frames}")]
    InfeasibleLength { frames: usize, required: usize },
    #[error("unknown phone {0:?}")]
    UnknownPhone(String),
    #[error("transcript is empty")]
    EmptyTranscript,
    #[error("invalid inventory: {0}")]
    InvalidInventory(String),
    #[error("invalid posteriorgram: {0}")]
    InvalidPosteriorgram(String),
    #[error("frame count mismatch: {0} vs {1}")]
    FrameCountMismatch(usize, usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
