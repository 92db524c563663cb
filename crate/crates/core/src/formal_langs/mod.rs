//! Executable definitions of the nine formal languages: membership, exact
//! continuation oracles, per-language length measures, counting, unranking,
//! and uniform sampling by length.
//!
//! Canonical payload ids per family:
//! - Growing `a b c` -> 3 4 5
//! - Copy `a b c |` -> 3 4 5 6
//! - Dyck `( ) { }` -> 3 4 5 6

mod analysis;
mod counting;

use crate::vocab::{Symbol, STOP};
use num_bigint::{BigUint, RandBigInt};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use counting::SliceTable;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LangError {
    #[error("symbol {0:?} is not in the alphabet of {1}")]
    UnknownSymbol(Symbol, LangName),
    #[error("no member of {0} has this prefix")]
    DeadPrefix(LangName),
    #[error("rank {rank} out of range for {lang} at length {length} (count {count})")]
    RankOutOfRange {
        lang: LangName,
        length: usize,
        rank: BigUint,
        count: BigUint,
    },
    #[error("{lang} has no strings of length {length}")]
    EmptySlice { lang: LangName, length: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LangName {
    An,
    Anbn,
    Anbncn,
    Kleene,
    Wwr,
    Ww,
    PairsN,
    Dyck,
    CrossDyck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Growing,
    Copy,
    Dyck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChomskyLevel {
    Regular,
    ContextFree,
    ContextSensitive,
}

impl LangName {
    pub const ALL: [LangName; 9] = [
        LangName::An,
        LangName::Anbn,
        LangName::Anbncn,
        LangName::Kleene,
        LangName::Wwr,
        LangName::Ww,
        LangName::PairsN,
        LangName::Dyck,
        LangName::CrossDyck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LangName::An => "an",
            LangName::Anbn => "anbn",
            LangName::Anbncn => "anbncn",
            LangName::Kleene => "kleene",
            LangName::Wwr => "wwr",
            LangName::Ww => "ww",
            LangName::PairsN => "pairs_n",
            LangName::Dyck => "dyck",
            LangName::CrossDyck => "cross_dyck",
        }
    }
}

impl std::fmt::Display for LangName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LangName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LangName::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown language '{s}'"))
    }
}

/// One of the nine formal languages, with the one configuration knob the
/// definitions leave open (whether `pairs_n` units may mix bracket types).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LanguageSpec {
    pub name: LangName,
    /// When set, `pairs_n` only accepts homogeneous unit sequences
    /// (`()()()` or `{}{}{}`, never `(){}`). Ignored by the other languages.
    #[serde(default)]
    pub pairs_homogeneous: bool,
}

/// A canonical (un-shuffled) member string together with its
/// language-specific length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalString {
    pub symbols: Vec<Symbol>,
    pub lang_length: usize,
}

/// Set of valid next tokens for a prefix: payload symbols plus possibly STOP.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ContinuationSet(u16);

impl ContinuationSet {
    pub fn empty() -> ContinuationSet {
        ContinuationSet(0)
    }

    pub fn insert(&mut self, sym: Symbol) {
        self.0 |= 1 << sym.id();
    }

    pub fn contains(&self, sym: Symbol) -> bool {
        self.0 & (1 << sym.id()) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// Symbols in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..crate::vocab::VOCAB_SIZE as u8)
            .filter(move |&id| self.0 & (1 << id) != 0)
            .map(|id| Symbol::new(id).unwrap())
    }

    pub fn has_stop(&self) -> bool {
        self.contains(STOP)
    }
}

impl FromIterator<Symbol> for ContinuationSet {
    fn from_iter<I: IntoIterator<Item = Symbol>>(iter: I) -> Self {
        let mut set = ContinuationSet::empty();
        for s in iter {
            set.insert(s);
        }
        set
    }
}

impl std::fmt::Debug for ContinuationSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl LanguageSpec {
    pub fn new(name: LangName) -> LanguageSpec {
        LanguageSpec {
            name,
            pairs_homogeneous: false,
        }
    }

    pub fn all() -> [LanguageSpec; 9] {
        LangName::ALL.map(LanguageSpec::new)
    }

    pub fn family(&self) -> Family {
        match self.name {
            LangName::An | LangName::Anbn | LangName::Anbncn => Family::Growing,
            LangName::Kleene | LangName::Wwr | LangName::Ww => Family::Copy,
            LangName::PairsN | LangName::Dyck | LangName::CrossDyck => Family::Dyck,
        }
    }

    pub fn chomsky_level(&self) -> ChomskyLevel {
        match self.name {
            LangName::An | LangName::Kleene | LangName::PairsN => ChomskyLevel::Regular,
            LangName::Anbn | LangName::Wwr | LangName::Dyck => ChomskyLevel::ContextFree,
            LangName::Anbncn | LangName::Ww | LangName::CrossDyck => {
                ChomskyLevel::ContextSensitive
            }
        }
    }

    /// Canonical alphabet, in id order. Family-wide: growing languages use a
    /// prefix of `a b c`, the copy family `a b c |`, the bracket family
    /// `( ) { }`.
    pub fn alphabet(&self) -> &'static [Symbol] {
        const S3: Symbol = Symbol::payload(0);
        const S4: Symbol = Symbol::payload(1);
        const S5: Symbol = Symbol::payload(2);
        const S6: Symbol = Symbol::payload(3);
        match self.name {
            LangName::An => &[S3],
            LangName::Anbn => &[S3, S4],
            LangName::Anbncn => &[S3, S4, S5],
            LangName::Kleene | LangName::Wwr | LangName::Ww => &[S3, S4, S5, S6],
            LangName::PairsN | LangName::Dyck | LangName::CrossDyck => &[S3, S4, S5, S6],
        }
    }

    /// Glyph for a payload symbol under this language's canonical mapping.
    pub fn glyph(&self, sym: Symbol) -> Option<char> {
        let glyphs: &[char] = match self.family() {
            Family::Growing => &['a', 'b', 'c'],
            Family::Copy => &['a', 'b', 'c', '|'],
            Family::Dyck => &['(', ')', '{', '}'],
        };
        glyphs.get(sym.slot()?).copied()
    }

    /// Renders a canonical symbol sequence with this language's glyphs.
    pub fn render(&self, seq: &[Symbol]) -> String {
        seq.iter().map(|&s| self.glyph(s).unwrap_or('?')).collect()
    }

    /// Parses a glyph string into canonical symbols. Inverse of [`render`]
    /// for symbols in the alphabet.
    pub fn parse(&self, text: &str) -> Result<Vec<Symbol>, String> {
        text.chars()
            .map(|ch| {
                let glyphs: &[char] = match self.family() {
                    Family::Growing => &['a', 'b', 'c'],
                    Family::Copy => &['a', 'b', 'c', '|'],
                    Family::Dyck => &['(', ')', '{', '}'],
                };
                glyphs
                    .iter()
                    .position(|&g| g == ch)
                    .map(Symbol::payload)
                    .ok_or_else(|| format!("glyph '{ch}' not in {} alphabet", self.name))
            })
            .collect()
    }

    fn check_alphabet(&self, s: &[Symbol]) -> Result<(), LangError> {
        for &sym in s {
            if !self.alphabet().contains(&sym) {
                return Err(LangError::UnknownSymbol(sym, self.name));
            }
        }
        Ok(())
    }

    /// Exact membership per the language definition. Errors only on symbols
    /// outside the alphabet; a dead-but-well-formed string is simply `false`.
    pub fn membership(&self, s: &[Symbol]) -> Result<bool, LangError> {
        self.check_alphabet(s)?;
        Ok(match analysis::analyze(self, s) {
            Some(info) => info.valid.has_stop(),
            None => false,
        })
    }

    /// Exact continuation oracle: symbol `x` is in the result iff
    /// `prefix + x` is a prefix of some member; STOP is in the result iff
    /// the prefix itself is a member. The empty prefix never contains STOP.
    pub fn valid_continuations(&self, prefix: &[Symbol]) -> Result<ContinuationSet, LangError> {
        self.check_alphabet(prefix)?;
        analysis::analyze(self, prefix)
            .map(|info| info.valid)
            .ok_or(LangError::DeadPrefix(self.name))
    }

    /// Language-specific length of a live prefix: a-count for growing
    /// languages, characters before `|` for the copy family, opening symbols
    /// for the bracket family, characters for kleene.
    pub fn prefix_length(&self, prefix: &[Symbol]) -> Result<usize, LangError> {
        self.check_alphabet(prefix)?;
        analysis::analyze(self, prefix)
            .map(|info| info.length)
            .ok_or(LangError::DeadPrefix(self.name))
    }

    /// Counting table reusable across lengths up to `max_length`.
    pub fn slice_table(&self, max_length: usize) -> SliceTable {
        SliceTable::new(*self, max_length)
    }

    /// Exact number of members with `lang_length == length`.
    pub fn count_strings(&self, length: usize) -> BigUint {
        self.slice_table(length).count(length)
    }

    /// The `rank`-th member of the length slice, in lexicographic order over
    /// canonical symbol ids. Bijective: ranks `0..count` enumerate the slice.
    pub fn unrank(&self, length: usize, rank: &BigUint) -> Result<CanonicalString, LangError> {
        self.slice_table(length).unrank(length, rank)
    }

    /// Uniform draw over the length slice: a rank is drawn uniformly below
    /// the slice count and unranked.
    pub fn sample_uniform<R: Rng>(
        &self,
        length: usize,
        rng: &mut R,
    ) -> Result<CanonicalString, LangError> {
        self.slice_table(length).sample_uniform(length, rng)
    }

    /// `n` independent draws; each first samples a length uniformly in
    /// `lo..=hi`, then a string uniformly at that length.
    pub fn sample_by_length_range<R: Rng>(
        &self,
        lo: usize,
        hi: usize,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<CanonicalString>, LangError> {
        assert!(1 <= lo && lo <= hi, "need 1 <= lo <= hi");
        let table = self.slice_table(hi);
        (0..n)
            .map(|_| {
                let length = rng.gen_range(lo..=hi);
                table.sample_uniform(length, rng)
            })
            .collect()
    }
}

impl SliceTable {
    /// Uniform draw at `length` using this table.
    pub fn sample_uniform<R: Rng>(
        &self,
        length: usize,
        rng: &mut R,
    ) -> Result<CanonicalString, LangError> {
        let count = self.count(length);
        if count == BigUint::default() {
            return Err(LangError::EmptySlice {
                lang: self.lang().name,
                length,
            });
        }
        let rank = rng.gen_biguint_below(&count);
        self.unrank(length, &rank)
    }
}

#[cfg(test)]
mod tests;
