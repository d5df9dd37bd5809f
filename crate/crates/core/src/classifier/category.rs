use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    SoundRepetition,
    SyllableRepetition,
    WordRepetition,
    Prolongation,
    BlockSilent,
    BlockAudible,
    Atypical,
}

impl Category {
    pub const CANONICAL: [Category; 6] = [
        Category::SoundRepetition,
        Category::SyllableRepetition,
        Category::WordRepetition,
        Category::Prolongation,
        Category::BlockSilent,
        Category::BlockAudible,
    ];

    pub const ALL: [Category; 7] = [
        Category::SoundRepetition,
        Category::SyllableRepetition,
        Category::WordRepetition,
        Category::Prolongation,
        Category::BlockSilent,
        Category::BlockAudible,
        Category::Atypical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::SoundRepetition => "sound_repetition",
            Category::SyllableRepetition => "syllable_repetition",
            Category::WordRepetition => "word_repetition",
            Category::Prolongation => "prolongation",
            Category::BlockSilent => "block_silent",
            Category::BlockAudible => "block_audible",
            Category::Atypical => "atypical",
        }
    }

    pub fn is_canonical(self) -> bool {
        self != Category::Atypical
    }

    /// Relative frequency (percent) among dysfluent events in the clinical
    /// reference population; used as synthetic-corpus priors.
    pub fn prior_percent(self) -> f64 {
        match self {
            Category::SoundRepetition => 28.4,
            Category::SyllableRepetition => 22.1,
            Category::WordRepetition => 15.3,
            Category::Prolongation => 19.7,
            Category::BlockSilent => 8.2,
            Category::BlockAudible => 6.3,
            Category::Atypical => 0.0,
        }
    }

    /// Static clinical severity tag.
    pub fn severity(self) -> &'static str {
        match self {
            Category::SoundRepetition | Category::SyllableRepetition | Category::Prolongation => "High",
            Category::WordRepetition => "Medium",
            Category::BlockSilent | Category::BlockAudible => "Very High",
            Category::Atypical => "Unrated",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown category {s:?}"))
    }
}

/// Scores for the six canonical categories, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryScores {
    pub sound_repetition: f64,
    pub syllable_repetition: f64,
    pub word_repetition: f64,
    pub prolongation: f64,
    pub block_silent: f64,
    pub block_audible: f64,
}

impl CategoryScores {
    pub fn get(&self, c: Category) -> f64 {
        match c {
            Category::SoundRepetition => self.sound_repetition,
            Category::SyllableRepetition => self.syllable_repetition,
            Category::WordRepetition => self.word_repetition,
            Category::Prolongation => self.prolongation,
            Category::BlockSilent => self.block_silent,
            Category::BlockAudible => self.block_audible,
            Category::Atypical => 0.0,
        }
    }

    /// Sets a canonical score, clamped to `[0, 1]`. Atypical is ignored.
    pub fn set(&mut self, c: Category, v: f64) {
        let v = v.clamp(0.0, 1.0);
        match c {
            Category::SoundRepetition => self.sound_repetition = v,
            Category::SyllableRepetition => self.syllable_repetition = v,
            Category::WordRepetition => self.word_repetition = v,
            Category::Prolongation => self.prolongation = v,
            Category::BlockSilent => self.block_silent = v,
            Category::BlockAudible => self.block_audible = v,
            Category::Atypical => {}
        }
    }

    pub fn only(c: Category, v: f64) -> Self {
        let mut s = Self::default();
        s.set(c, v);
        s
    }

    /// Highest canonical score; ties go to the earlier category in
    /// [`Category::CANONICAL`].
    pub fn best(&self) -> (Category, f64) {
        let mut best = (Category::SoundRepetition, self.sound_repetition);
        for c in Category::CANONICAL {
            if self.get(c) > best.1 {
                best = (c, self.get(c));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn priors_sum_to_one_hundred() {
        let total: f64 = Category::CANONICAL.iter().map(|c| c.prior_percent()).sum();
        assert!((total - 100.0).abs() < 1e-9);
    }

    #[test]
    fn names_round_trip() {
        for c in Category::ALL {
            assert_eq!(c.as_str().parse::<Category>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.as_str()));
        }
    }

    #[test]
    fn best_prefers_earlier_on_ties() {
        let mut s = CategoryScores::default();
        s.set(Category::WordRepetition, 0.7);
        s.set(Category::Prolongation, 0.7);
        assert_eq!(s.best(), (Category::WordRepetition, 0.7));
        assert_eq!(CategoryScores::default().best().1, 0.0);
    }

    #[test]
    fn set_clamps() {
        assert_eq!(CategoryScores::only(Category::Prolongation, 3.9).prolongation, 1.0);
    }
}
