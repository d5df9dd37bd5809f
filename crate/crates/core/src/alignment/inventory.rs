use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AlignmentError;

/// Reserved display name for the CTC blank; never a valid symbol.
pub const BLANK_SYMBOL: &str = "<blank>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhoneClass {
    #[default]
    Consonant,
    Vowel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhoneEntry {
    pub symbol: String,
    pub mean_ms: f64,
    pub std_ms: f64,
    #[serde(default)]
    pub class: PhoneClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInventory", into = "RawInventory")]
pub struct PhonemeInventory {
    name: String,
    blank_index: usize,
    symbols: Vec<PhoneEntry>,
    lookup: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInventory {
    name: String,
    blank_index: usize,
    symbols: Vec<PhoneEntry>,
}

impl TryFrom<RawInventory> for PhonemeInventory {
    type Error = AlignmentError;

    fn try_from(raw: RawInventory) -> Result<Self, Self::Error> {
        PhonemeInventory::new(raw.name, raw.blank_index, raw.symbols)
    }
}

impl From<PhonemeInventory> for RawInventory {
    fn from(inv: PhonemeInventory) -> Self {
        RawInventory {
            name: inv.name,
            blank_index: inv.blank_index,
            symbols: inv.symbols,
        }
    }
}


impl PhonemeInventory {
    pub fn new(
        name: impl Into<String>,
        blank_index: usize,
        symbols: Vec<PhoneEntry>,
    ) -> Result<Self, AlignmentError> {
        let bad = |m: String| Err(AlignmentError::InvalidInventory(m));
        if symbols.is_empty() {
            return bad("no symbols".into());
        }
        if blank_index > symbols.len() {
            return bad(format!(
                "blank_index {blank_index} outside 0..={}",
                symbols.len()
            ));
        }
        let mut lookup = HashMap::new();
        for (i, e) in symbols.iter().enumerate() {
            if e.symbol.is_empty() || e.symbol == BLANK_SYMBOL {
                return bad(format!("symbol {i} uses a reserved name {:?}", e.symbol));
            }
            if e.symbol.chars().any(|c| c.is_whitespace() || "-.|".contains(c)) {
                return bad(format!("symbol {:?} contains a delimiter", e.symbol));
            }
            if !(e.mean_ms > 0.0 && e.std_ms > 0.0) {
                return bad(format!("symbol {:?} needs positive duration stats", e.symbol));
            }
            if lookup.insert(e.symbol.clone(), i).is_some() {
                return bad(format!("duplicate symbol {:?}", e.symbol));
            }
        }
        Ok(Self {
            name: name.into(),
            blank_index,
            symbols,
            lookup,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, AlignmentError> {
        serde_json::from_str(text).map_err(|e| AlignmentError::InvalidInventory(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AlignmentError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Ten-phone demo inventory used by the synthetic corpus.
    pub fn demo() -> Self {
        Self::from_json(include_str!("../../data/inventory_demo.json"))
            .expect("bundled demo inventory is valid")
    }

    /// Mandarin-oriented inventory of pinyin initials and finals.
    pub fn mandarin() -> Self {
        Self::from_json(include_str!("../../data/inventory_mandarin.json"))
            .expect("bundled Mandarin inventory is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn blank_index(&self) -> usize {
        self.blank_index
    }

    /// Number of phone symbols (excluding blank).
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn entries(&self) -> &[PhoneEntry] {
        &self.symbols
    }

    pub fn entry(&self, sym: usize) -> &PhoneEntry {
        &self.symbols[sym]
    }

    pub fn symbol(&self, sym: usize) -> &str {
        &self.symbols[sym].symbol
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.lookup.get(symbol).copied()
    }

    pub fn is_vowel(&self, sym: usize) -> bool {
        self.symbols[sym].class == PhoneClass::Vowel
    }

    /// Posteriorgram column holding `sym`.
    pub fn column(&self, sym: usize) -> usize {
        if sym < self.blank_index {
            sym
        } else {
            sym + 1
        }
    }

    /// Inverse of [`column`](Self::column); `None` for the blank column.
    pub fn symbol_of_column(&self, col: usize) -> Option<usize> {
        use std::cmp::Ordering::*;
        match col.cmp(&self.blank_index) {
            Less => Some(col),
            Equal => None,
            Greater => Some(col - 1),
        }
    }

    pub fn duration_z(&self, sym: usize, duration_ms: f64) -> f64 {
        let e = &self.symbols[sym];
        (duration_ms - e.mean_ms) / e.std_ms
    }
}
