//! Alphabets and words.
//!
//! Words are stored left-to-right in time order: the rightmost symbol is the
//! most recent one. A suffix of a word is therefore a trailing segment, and
//! `suf(w)` drops the leftmost (oldest) symbol.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported alphabet.
pub const MAX_ALPHABET: usize = 16;

/// An ordered set of single-character symbols. The order fixes the layout of
/// every probability row in the crate.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.len() < 2 {
            return Err(Error::InvalidAlphabet(format!(
                "need at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        if symbols.len() > MAX_ALPHABET {
            return Err(Error::InvalidAlphabet(format!(
                "at most {MAX_ALPHABET} symbols are supported, got {}",
                symbols.len()
            )));
        }
        for (i, c) in symbols.iter().enumerate() {
            if symbols[..i].contains(c) {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol {c:?}")));
            }
        }
        Ok(Self { symbols })
    }

    /// The alphabet `{0, 1}`.
    pub fn binary() -> Self {
        Self {
            symbols: vec!['0', '1'],
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn index_of(&self, c: char) -> Result<u8> {
        self.symbols
            .iter()
            .position(|&s| s == c)
            .map(|i| i as u8)
            .ok_or(Error::InvalidSymbol(c))
    }

    pub fn symbol(&self, index: u8) -> char {
        self.symbols[index as usize]
    }

    /// Parses a string of symbols into a word.
    pub fn parse(&self, s: &str) -> Result<Word> {
        s.chars()
            .map(|c| self.index_of(c))
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }

    /// Parses a string of symbols into raw symbol indices.
    pub fn encode(&self, s: &str) -> Result<Vec<u8>> {
        s.chars().map(|c| self.index_of(c)).collect()
    }

    pub fn render(&self, symbols: &[u8]) -> String {
        symbols.iter().map(|&i| self.symbol(i)).collect()
    }

    /// All words of length exactly `len`, in lexicographic order.
    pub fn words_of_len(&self, len: usize) -> impl Iterator<Item = Word> + '_ {
        let k = self.len() as u64;
        let total = k.checked_pow(len as u32).unwrap_or(u64::MAX);
        (0..total).map(move |mut idx| {
            let mut w = vec![0u8; len];
            for slot in w.iter_mut().rev() {
                *slot = (idx % k) as u8;
                idx /= k;
            }
            Word(w)
        })
    }
}

/// A finite word over an alphabet, stored as symbol indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<u8>);

impl Word {
    /// The empty word λ.
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_slice(s: &[u8]) -> Self {
        Word(s.to_vec())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    /// The largest proper suffix: drops the leftmost symbol. `suf(λ) = λ`.
    pub fn suf(&self) -> Word {
        Word(self.0.get(1..).unwrap_or_default().to_vec())
    }

    /// `self ≺ other`: self is a strict trailing segment of other.
    pub fn is_proper_suffix_of(&self, other: &Word) -> bool {
        self.len() < other.len() && other.0.ends_with(&self.0)
    }

    /// `self ⪯ other`.
    pub fn is_suffix_of(&self, other: &Word) -> bool {
        other.0.ends_with(&self.0)
    }

    /// The trailing segment of length `len`.
    pub fn tail(&self, len: usize) -> Word {
        Word(self.0[self.len() - len..].to_vec())
    }

    /// `a·self`.
    pub fn prepend(&self, a: u8) -> Word {
        let mut v = Vec::with_capacity(self.len() + 1);
        v.push(a);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    /// `self·a`.
    pub fn append(&self, a: u8) -> Word {
        let mut v = self.0.clone();
        v.push(a);
        Word(v)
    }

    /// `u·self`.
    pub fn prepend_word(&self, u: &Word) -> Word {
        let mut v = u.0.clone();
        v.extend_from_slice(&self.0);
        Word(v)
    }

    /// Every proper suffix, longest first, ending with λ.
    pub fn proper_suffixes(&self) -> impl Iterator<Item = Word> + '_ {
        (1..=self.len()).map(move |i| Word(self.0[i..].to_vec()))
    }
}

impl From<Vec<u8>> for Word {
    fn from(v: Vec<u8>) -> Self {
        Word(v)
    }
}

/// Displays symbol indices as digits/letters; use [`Alphabet::render`] for
/// the real symbols.
impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("λ");
        }
        for &s in &self.0 {
            write!(f, "{}", std::char::from_digit(s as u32, 36).unwrap_or('?'))?;
        }
        Ok(())
    }
}
