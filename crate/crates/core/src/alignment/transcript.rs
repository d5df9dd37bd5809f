use std::ops::Range;

use super::{AlignmentError, PhonemeInventory};

/// Expected phone sequence with word structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedTranscript {
    /// Inventory symbol indices.
    pub phones: Vec<usize>,
    /// Index into `phones` where each word starts; strictly increasing, first is 0.
    pub word_boundaries: Vec<usize>,
    pub source_text: String,
}

impl ExpectedTranscript {
    /// Parses whitespace-separated words. Inside a word, phones may be split by
    /// `-`, `.` or `|`; undelimited runs are tokenized by greedy longest match
    /// against the inventory.
    pub fn parse(text: &str, inv: &PhonemeInventory) -> Result<Self, AlignmentError> {
        let mut phones = Vec::new();
        let mut word_boundaries = Vec::new();
        for word in text.split_whitespace() {
            let start = phones.len();
            for piece in word.split(['-', '.', '|']).filter(|p| !p.is_empty()) {
                tokenize(piece, inv, &mut phones)?;
            }
            if phones.len() > start {
                word_boundaries.push(start);
            }
        }
        if phones.is_empty() {
            return Err(AlignmentError::EmptyTranscript);
        }
        Ok(Self {
            phones,
            word_boundaries,
            source_text: text.to_string(),
        })
    }

    /// Builds a transcript from words given as symbol lists.
    pub fn from_words<S: AsRef<str>>(
        words: &[Vec<S>],
        inv: &PhonemeInventory,
    ) -> Result<Self, AlignmentError> {
        let text = words
            .iter()
            .map(|w| w.iter().map(|s| s.as_ref()).collect::<Vec<_>>().join("-"))
            .collect::<Vec<_>>()
            .join(" ");
        Self::parse(&text, inv)
    }

    pub fn len(&self) -> usize {
        self.phones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phones.is_empty()
    }

    pub fn symbols<'a>(&self, inv: &'a PhonemeInventory) -> Vec<&'a str> {
        self.phones.iter().map(|&p| inv.symbol(p)).collect()
    }

    /// Phone ranges of each word.
    pub fn words(&self) -> Vec<Range<usize>> {
        let mut out = Vec::with_capacity(self.word_boundaries.len());
        for (i, &start) in self.word_boundaries.iter().enumerate() {
            let end = self
                .word_boundaries
                .get(i + 1)
                .copied()
                .unwrap_or(self.phones.len());
            out.push(start..end);
        }
        out
    }

    /// Phone ranges of each syllable.
    ///
    /// Every syllable holds one vowel nucleus. A single consonant between two
    /// vowels starts the next syllable; in longer clusters the first consonant
    /// closes the previous syllable. Words without vowels form one syllable.
    pub fn syllables(&self, inv: &PhonemeInventory) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        for word in self.words() {
            let vowels: Vec<usize> = word.clone().filter(|&i| inv.is_vowel(self.phones[i])).collect();
            if vowels.len() <= 1 {
                out.push(word);
                continue;
            }
            let mut start = word.start;
            for pair in vowels.windows(2) {
                let between = pair[1] - pair[0] - 1;
                let cut = if between <= 1 { pair[0] + 1 } else { pair[0] + 2 };
                out.push(start..cut);
                start = cut;
            }
            out.push(start..word.end);
        }
        out
    }
}

fn tokenize(
    piece: &str,
    inv: &PhonemeInventory,
    out: &mut Vec<usize>,
) -> Result<(), AlignmentError> {
    let mut rest = piece;
    while !rest.is_empty() {
        let found = rest
            .char_indices()
            .map(|(i, c)| i + c.len_utf8())
            .rev()
            .find_map(|end| inv.index_of(&rest[..end]).map(|s| (s, end)));
        match found {
            Some((sym, end)) => {
                out.push(sym);
                rest = &rest[end..];
            }
            None => return Err(AlignmentError::UnknownPhone(rest.to_string())),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_delimited_and_greedy() {
        let inv = PhonemeInventory::demo();
        let t = ExpectedTranscript::parse("b-a-l dogi", &inv).unwrap();
        assert_eq!(t.symbols(&inv), vec!["b", "a", "l", "d", "o", "g", "i"]);
        assert_eq!(t.word_boundaries, vec![0, 3]);
        assert_eq!(t.words(), vec![0..3, 3..7]);
    }

    #[test]
    fn greedy_prefers_longest_symbol() {
        let inv = PhonemeInventory::mandarin();
        let t = ExpectedTranscript::parse("zhang", &inv).unwrap();
        assert_eq!(t.symbols(&inv), vec!["zh", "ang"]);
    }

    #[test]
    fn syllabifies_words() {
        let inv = PhonemeInventory::demo();
        let t = ExpectedTranscript::parse("balada bal", &inv).unwrap();
        assert_eq!(t.syllables(&inv), vec![0..2, 2..4, 4..6, 6..9]);
        let t = ExpectedTranscript::parse("balda", &inv).unwrap();
        assert_eq!(t.syllables(&inv), vec![0..3, 3..5]);
    }

    #[test]
    fn errors() {
        let inv = PhonemeInventory::demo();
        assert!(matches!(
            ExpectedTranscript::parse("   ", &inv),
            Err(AlignmentError::EmptyTranscript)
        ));
        assert!(matches!(
            ExpectedTranscript::parse("bax", &inv),
            Err(AlignmentError::UnknownPhone(p)) if p == "x"
        ));
    }
}
