//! Korean text to grapheme ID sequences.
//!
//! Each precomposed Hangul syllable splits into onset, nucleus and coda
//! indices by the Unicode arithmetic decomposition. The symbol table holds the
//! 19 onsets, 21 nuclei and 28 codas (slot 0 being the empty coda) plus a
//! whitelist of punctuation and digits. The empty coda has an ID but is never
//! emitted into a sequence.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const SYLLABLE_BASE: u32 = 0xAC00;
pub const SYLLABLE_LAST: u32 = 0xD7A3;
pub const ONSET_COUNT: u32 = 19;
pub const NUCLEUS_COUNT: u32 = 21;
/// Includes the empty coda at index 0.
pub const CODA_COUNT: u32 = 28;
const NUCLEUS_CODA_COUNT: u32 = NUCLEUS_COUNT * CODA_COUNT;

const ONSET_JAMO_BASE: u32 = 0x1100;
const NUCLEUS_JAMO_BASE: u32 = 0x1161;
/// Coda `i` (i >= 1) is U+11A7 + i.
const CODA_JAMO_BASE: u32 = 0x11A7;

pub const PAD_SYMBOL: &str = "_pad";
pub const EMPTY_CODA_SYMBOL: &str = "_nocoda";

pub const DEFAULT_EXTRAS: [char; 21] = [
    ' ', '.', ',', '?', '!', '"', '\'', '\u{201C}', '\u{201D}', '\u{2018}', '\u{2019}', '0', '1', '2', '3', '4',
    '5', '6', '7', '8', '9',
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("{0:?} (U+{code:04X}) is not a precomposed Hangul syllable", code = u32::from(*.0))]
    NotHangulSyllable(char),
    #[error("jamo indices ({onset}, {nucleus}, {coda}) out of range")]
    IndexOutOfRange { onset: u32, nucleus: u32, coda: u32 },
    #[error("unsupported character {ch:?} (U+{code:04X}) at byte {byte_offset}", code = u32::from(*ch))]
    UnsupportedCharacter { ch: char, byte_offset: usize },
    #[error("text is empty after whitespace normalization")]
    EmptyText,
    #[error("invalid symbol table: {0}")]
    InvalidTable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Jamo {
    pub onset: u32,
    pub nucleus: u32,
    pub coda: u32,
}

pub fn decompose_syllable(ch: char) -> Result<Jamo, TextError> {
    let cp = u32::from(ch);
    if !(SYLLABLE_BASE..=SYLLABLE_LAST).contains(&cp) {
        return Err(TextError::NotHangulSyllable(ch));
    }
    let s = cp - SYLLABLE_BASE;
    Ok(Jamo {
        onset: s / NUCLEUS_CODA_COUNT,
        nucleus: (s % NUCLEUS_CODA_COUNT) / CODA_COUNT,
        coda: s % CODA_COUNT,
    })
}

pub fn compose_syllable(onset: u32, nucleus: u32, coda: u32) -> Result<char, TextError> {
    if onset >= ONSET_COUNT || nucleus >= NUCLEUS_COUNT || coda >= CODA_COUNT {
        return Err(TextError::IndexOutOfRange { onset, nucleus, coda });
    }
    let cp = SYLLABLE_BASE + onset * NUCLEUS_CODA_COUNT + nucleus * CODA_COUNT + coda;
    Ok(char::from_u32(cp).expect("syllable block is valid Unicode"))
}

/// Dense symbol inventory; ID 0 is padding.
///
/// Layout: padding, onsets, nuclei, codas (empty coda first), extras.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    symbols: Vec<String>,
    extras: HashMap<char, u32>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        Self::with_extras(&DEFAULT_EXTRAS).expect("default extras are valid")
    }
}

fn jamo_symbol(base: u32, index: u32) -> String {
    char::from_u32(base + index).expect("conjoining jamo block").to_string()
}

impl SymbolTable {
    pub fn with_extras(extras: &[char]) -> Result<Self, TextError> {
        let mut symbols = vec![PAD_SYMBOL.to_string()];
        symbols.extend((0..ONSET_COUNT).map(|i| jamo_symbol(ONSET_JAMO_BASE, i)));
        symbols.extend((0..NUCLEUS_COUNT).map(|i| jamo_symbol(NUCLEUS_JAMO_BASE, i)));
        symbols.push(EMPTY_CODA_SYMBOL.to_string());
        symbols.extend((1..CODA_COUNT).map(|i| jamo_symbol(CODA_JAMO_BASE, i)));

        let mut map = HashMap::new();
        for &ch in extras {
            let cp = u32::from(ch);
            if (SYLLABLE_BASE..=SYLLABLE_LAST).contains(&cp) || (0x1100..=0x11FF).contains(&cp) {
                return Err(TextError::InvalidTable(format!("extra {ch:?} collides with Hangul")));
            }
            if map.insert(ch, symbols.len() as u32).is_some() {
                return Err(TextError::InvalidTable(format!("duplicate extra {ch:?}")));
            }
            symbols.push(ch.to_string());
        }
        Ok(Self { symbols, extras: map })
    }

    pub fn onset_id(&self, onset: u32) -> u32 {
        assert!(onset < ONSET_COUNT);
        1 + onset
    }

    pub fn nucleus_id(&self, nucleus: u32) -> u32 {
        assert!(nucleus < NUCLEUS_COUNT);
        1 + ONSET_COUNT + nucleus
    }

    pub fn coda_id(&self, coda: u32) -> u32 {
        assert!(coda < CODA_COUNT);
        1 + ONSET_COUNT + NUCLEUS_COUNT + coda
    }

    pub fn extra_id(&self, ch: char) -> Option<u32> {
        self.extras.get(&ch).copied()
    }

    pub fn symbol(&self, id: u32) -> Option<&str> {
        self.symbols.get(id as usize).map(String::as_str)
    }

    /// Number of IDs including padding.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn extras(&self) -> impl Iterator<Item = char> + '_ {
        let first = (1 + ONSET_COUNT + NUCLEUS_COUNT + CODA_COUNT) as usize;
        self.symbols[first..].iter().map(|s| s.chars().next().expect("extras are single chars"))
    }
}

impl Serialize for SymbolTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.symbols.len()))?;
        for (id, sym) in self.symbols.iter().enumerate() {
            map.serialize_entry(sym, &id)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for SymbolTable {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = HashMap::<String, u32>::deserialize(deserializer)?;
        let by_id: BTreeMap<u32, String> = raw.into_iter().map(|(s, id)| (id, s)).collect();
        let base = Self::with_extras(&[]).map_err(D::Error::custom)?;
        let mut extras = Vec::new();
        for (expect, (id, sym)) in by_id.iter().enumerate() {
            if *id as usize != expect {
                return Err(D::Error::custom(format!("ids are not dense: missing {expect}")));
            }
            match base.symbols.get(expect) {
                Some(fixed) if fixed != sym => {
                    return Err(D::Error::custom(format!("id {id} must be {fixed:?}, found {sym:?}")))
                }
                Some(_) => {}
                None => {
                    let mut chars = sym.chars();
                    match (chars.next(), chars.next()) {
                        (Some(c), None) => extras.push(c),
                        _ => return Err(D::Error::custom(format!("extra symbol {sym:?} is not one character"))),
                    }
                }
            }
        }
        if by_id.len() < base.symbols.len() {
            return Err(D::Error::custom("table is missing jamo symbols"));
        }
        Self::with_extras(&extras).map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphemeSequence {
    pub ids: Vec<u32>,
    pub source_text: String,
}

impl GraphemeSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

impl fmt::Display for GraphemeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.ids.iter().map(u32::to_string).collect();
        write!(f, "{}", ids.join(" "))
    }
}

/// Converts a transcript to grapheme IDs.
///
/// Leading and trailing whitespace is dropped and inner runs of whitespace
/// become one space symbol. Characters that are neither Hangul syllables nor
/// whitelisted extras are rejected.
pub fn text_to_graphemes(text: &str, table: &SymbolTable) -> Result<GraphemeSequence, TextError> {
    let mut ids = Vec::with_capacity(text.len());
    let mut pending_space: Option<usize> = None;
    for (offset, ch) in text.char_indices() {
        if ch.is_whitespace() {
            pending_space.get_or_insert(offset);
            continue;
        }
        if let Some(at) = pending_space.take() {
            if !ids.is_empty() {
                let space = table
                    .extra_id(' ')
                    .ok_or(TextError::UnsupportedCharacter { ch: ' ', byte_offset: at })?;
                ids.push(space);
            }
        }
        match decompose_syllable(ch) {
            Ok(j) => {
                ids.push(table.onset_id(j.onset));
                ids.push(table.nucleus_id(j.nucleus));
                if j.coda != 0 {
                    ids.push(table.coda_id(j.coda));
                }
            }
            Err(_) => {
                let id = table.extra_id(ch).ok_or(TextError::UnsupportedCharacter { ch, byte_offset: offset })?;
                ids.push(id);
            }
        }
    }
    if ids.is_empty() {
        return Err(TextError::EmptyText);
    }
    Ok(GraphemeSequence { ids, source_text: text.to_string() })
}
