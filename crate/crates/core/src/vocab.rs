//! Frequency-filtered vocabulary.
//!
//! Non-formula words are lowercased; chemical formulas keep their case and
//! enter the vocabulary regardless of how rarely they occur.

use alloc::borrow::Cow;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::formula::is_formula;
use crate::{Error, Result};

pub const DEFAULT_MIN_COUNT: u64 = 5;

/// Key under which a surface token is counted, embedded and matched.
pub fn canonical_word(surface: &str) -> Cow<'_, str> {
    canonical_word_with(surface, is_formula)
}

pub fn canonical_word_with(surface: &str, formula: impl Fn(&str) -> bool) -> Cow<'_, str> {
    if formula(surface) || !surface.chars().any(char::is_uppercase) {
        Cow::Borrowed(surface)
    } else {
        Cow::Owned(surface.to_lowercase())
    }
}

/// Raw corpus counts. Mergeable, so counting can be split across workers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordCounts {
    counts: BTreeMap<String, (u64, bool)>,
    total: u64,
}

impl WordCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_with(&mut self, surface: &str, formula: &impl Fn(&str) -> bool) {
        let is_f = formula(surface);
        let key = if is_f { Cow::Borrowed(surface) } else { canonical_word_with(surface, |_| false) };
        let entry = self.counts.entry(key.into_owned()).or_insert((0, is_f));
        entry.0 += 1;
        entry.1 |= is_f;
        self.total += 1;
    }

    pub fn add(&mut self, surface: &str) {
        self.add_with(surface, &is_formula);
    }

    pub fn merge(&mut self, other: WordCounts) {
        for (w, (c, f)) in other.counts {
            let entry = self.counts.entry(w).or_insert((0, f));
            entry.0 += c;
            entry.1 |= f;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn get(&self, word: &str) -> Option<u64> {
        self.counts.get(word).map(|&(c, _)| c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub word: String,
    pub count: u64,
    pub is_formula: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: BTreeMap<String, usize>,
    total_tokens: u64,
}

impl Vocabulary {
    /// Keeps words with `count > min_count`, plus every formula. Entries are
    /// ordered by count descending, then word ascending; the position is the
    /// word index.
    pub fn from_counts(counts: WordCounts, min_count: u64) -> Result<Self> {
        if counts.total == 0 {
            return Err(Error::EmptyCorpus);
        }
        let entries = counts
            .counts
            .into_iter()
            .filter(|(_, (c, f))| *c > min_count || *f)
            .map(|(word, (count, is_formula))| VocabEntry { word, count, is_formula })
            .collect();
        Ok(Self::from_entries(entries, counts.total))
    }

    /// Rebuilds a vocabulary from entries (e.g. read from disk); entries are
    /// re-sorted into canonical order.
    pub fn from_entries(mut entries: Vec<VocabEntry>, total_tokens: u64) -> Self {
        entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
        entries.dedup_by(|a, b| a.word == b.word);
        let index = entries.iter().enumerate().map(|(i, e)| (e.word.clone(), i)).collect();
        Vocabulary { entries, index, total_tokens }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn set_total_tokens(&mut self, total: u64) {
        self.total_tokens = total;
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn entry(&self, index: usize) -> Option<&VocabEntry> {
        self.entries.get(index)
    }

    pub fn word(&self, index: usize) -> &str {
        &self.entries[index].word
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Index of a raw surface token after canonicalization.
    pub fn lookup(&self, surface: &str) -> Option<usize> {
        self.index_of(&canonical_word(surface))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Maps a sentence of surfaces to vocabulary indices, dropping
    /// out-of-vocabulary tokens.
    pub fn encode<'a>(&self, surfaces: impl IntoIterator<Item = &'a str>) -> Vec<usize> {
        surfaces.into_iter().filter_map(|s| self.lookup(s)).collect()
    }
}

pub fn build_vocabulary<'a, D, S>(
    docs: D,
    min_count: u64,
    formula_detector: impl Fn(&str) -> bool,
) -> Result<Vocabulary>
where
    D: IntoIterator<Item = S>,
    S: IntoIterator<Item = &'a str>,
{
    let mut counts = WordCounts::new();
    for doc in docs {
        for tok in doc {
            counts.add_with(tok, &formula_detector);
        }
    }
    Vocabulary::from_counts(counts, min_count)
}
