use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Category;

#[derive(Debug, Error)]
pub enum ThresholdError {
    #[error("{0}")]
    Malformed(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ThresholdError {
    /// Name of the offending field, when known.
    pub fn field(&self) -> Option<&str> {
        match self {
            ThresholdError::Field { field, .. } => Some(field),
            _ => None,
        }
    }
}

/// Minimum calibrated confidence per category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sensitivity {
    pub sound_repetition: f64,
    pub syllable_repetition: f64,
    pub word_repetition: f64,
    pub prolongation: f64,
    pub block_silent: f64,
    pub block_audible: f64,
    pub atypical: f64,
}

impl Default for Sensitivity {
    fn default() -> Self {
        Self::uniform(0.5)
    }
}

impl Sensitivity {
    pub fn uniform(v: f64) -> Self {
        Self {
            sound_repetition: v,
            syllable_repetition: v,
            word_repetition: v,
            prolongation: v,
            block_silent: v,
            block_audible: v,
            atypical: v,
        }
    }

    pub fn get(&self, c: Category) -> f64 {
        match c {
            Category::SoundRepetition => self.sound_repetition,
            Category::SyllableRepetition => self.syllable_repetition,
            Category::WordRepetition => self.word_repetition,
            Category::Prolongation => self.prolongation,
            Category::BlockSilent => self.block_silent,
            Category::BlockAudible => self.block_audible,
            Category::Atypical => self.atypical,
        }
    }

    pub fn set(&mut self, c: Category, v: f64) {
        let slot = match c {
            Category::SoundRepetition => &mut self.sound_repetition,
            Category::SyllableRepetition => &mut self.syllable_repetition,
            Category::WordRepetition => &mut self.word_repetition,
            Category::Prolongation => &mut self.prolongation,
            Category::BlockSilent => &mut self.block_silent,
            Category::BlockAudible => &mut self.block_audible,
            Category::Atypical => &mut self.atypical,
        };
        *slot = v;
    }
}

/// Analysis and decision thresholds. Serialized as JSON with these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub sensitivity: Sensitivity,
    pub open_set_threshold: f64,
    /// Duration z-score above which a matched phone is a prolongation.
    pub z_prolong: f64,
    /// Minimum silence (ms) between speech to count as a silent block.
    pub silence_block_ms: f64,
    /// Energy level (dB) below which a frame is silent.
    pub silence_db: f64,
    pub w_canonical: f64,
    pub w_open: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            sensitivity: Sensitivity::default(),
            open_set_threshold: 0.6,
            z_prolong: 2.5,
            silence_block_ms: 250.0,
            silence_db: -60.0,
            w_canonical: 0.8,
            w_open: 0.2,
        }
    }
}

impl Thresholds {
    pub fn from_json(text: &str) -> Result<Self, ThresholdError> {
        let th: Thresholds = serde_json::from_str(text).map_err(|e| ThresholdError::Malformed(e.to_string()))?;
        th.validate()?;
        Ok(th)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ThresholdError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("thresholds serialize")
    }

    pub fn validate(&self) -> Result<(), ThresholdError> {
        let field = |field: String, message: &str| ThresholdError::Field {
            field,
            message: message.to_string(),
        };
        let unit = |name: String, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(field(name, &format!("must be within [0, 1], got {v}")))
            }
        };
        for c in Category::ALL {
            unit(format!("sensitivity.{c}"), self.sensitivity.get(c))?;
        }
        unit("open_set_threshold".into(), self.open_set_threshold)?;
        unit("w_canonical".into(), self.w_canonical)?;
        unit("w_open".into(), self.w_open)?;
        if ((self.w_canonical + self.w_open) - 1.0).abs() > 1e-9 {
            return Err(field(
                "w_open".into(),
                &format!("w_canonical + w_open must be 1, got {}", self.w_canonical + self.w_open),
            ));
        }
        if !self.z_prolong.is_finite() || self.z_prolong < 0.0 {
            return Err(field("z_prolong".into(), "must be a non-negative number"));
        }
        if !self.silence_block_ms.is_finite() || self.silence_block_ms <= 0.0 {
            return Err(field("silence_block_ms".into(), "must be positive"));
        }
        if !self.silence_db.is_finite() || self.silence_db > 0.0 {
            return Err(field("silence_db".into(), "must be a finite level at or below 0 dB"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let th = Thresholds::default();
        th.validate().unwrap();
        assert_eq!(Thresholds::from_json(&th.to_json()).unwrap(), th);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let th = Thresholds::from_json(r#"{"sensitivity":{"prolongation":0.9}}"#).unwrap();
        assert_eq!(th.sensitivity.prolongation, 0.9);
        assert_eq!(th.sensitivity.block_silent, 0.5);
        assert_eq!(th.z_prolong, 2.5);
    }

    #[test]
    fn out_of_range_names_the_field() {
        let err = Thresholds::from_json(r#"{"sensitivity":{"block_audible":1.5}}"#).unwrap_err();
        assert_eq!(err.field(), Some("sensitivity.block_audible"));
    }

    #[test]
    fn weights_must_sum_to_one() {
        let err = Thresholds::from_json(r#"{"w_canonical":0.5,"w_open":0.2}"#).unwrap_err();
        assert_eq!(err.field(), Some("w_open"));
    }

    #[test]
    fn unknown_field_is_malformed_and_named() {
        let err = Thresholds::from_json(r#"{"sensitivty":{}}"#).unwrap_err();
        assert!(matches!(err, ThresholdError::Malformed(_)));
        assert!(err.to_string().contains("sensitivty"));
    }
}
