//! Seed entity extraction: dictionary tagging plus the formula grammar.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::formula::is_formula;
use crate::matcher::PhraseMatcher;
use crate::text::{normalize_text, tokenize, TokenizedDocument};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityKind {
    Formula,
    DictionaryTerm,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityKind::Formula => "Formula",
            EntityKind::DictionaryTerm => "DictionaryTerm",
        })
    }
}

impl FromStr for EntityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Formula" => Ok(EntityKind::Formula),
            "DictionaryTerm" => Ok(EntityKind::DictionaryTerm),
            other => Err(Error::InvalidParameter(alloc::format!("unknown entity kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySpan {
    pub doc_id: String,
    pub sentence_idx: usize,
    pub token_start: usize,
    pub token_end: usize,
    pub entity_kind: EntityKind,
    pub canonical: String,
}

/// Case-insensitive multi-word term dictionary. Terms are tokenized with the
/// corpus tokenizer so their token boundaries line up with documents.
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    matcher: PhraseMatcher<String>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms<'a>(terms: impl IntoIterator<Item = &'a str>) -> Self {
        let mut d = Dictionary::new();
        for t in terms {
            d.insert(t);
        }
        d
    }

    /// One term per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        Self::from_terms(
            text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn insert(&mut self, term: &str) -> bool {
        let tokens: Vec<String> =
            tokenize(&normalize_text(term)).into_iter().map(|t| t.surface.to_lowercase()).collect();
        let canonical = tokens.join(" ");
        self.matcher.insert(tokens, canonical)
    }

    pub fn len(&self) -> usize {
        self.matcher.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matcher.is_empty()
    }
}

/// Tags one sentence of surfaces: greedy longest dictionary matches first,
/// then single-token formulas among the remaining tokens. Returns
/// `(start, end, kind, canonical)`.
pub fn tag_tokens<S: AsRef<str>>(
    tokens: &[S],
    dictionary: &Dictionary,
) -> Vec<(usize, usize, EntityKind, String)> {
    let lowered: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if let Some((n, canonical)) = dictionary.matcher.longest_at(&lowered, i) {
            out.push((i, i + n, EntityKind::DictionaryTerm, canonical.clone()));
            i += n;
        } else {
            let surface = tokens[i].as_ref();
            if is_formula(surface) {
                out.push((i, i + 1, EntityKind::Formula, surface.to_string()));
            }
            i += 1;
        }
    }
    out
}

pub fn tag_entities(doc: &TokenizedDocument, dictionary: &Dictionary) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    for (sentence_idx, sentence) in doc.sentences.iter().enumerate() {
        let surfaces: Vec<&str> = sentence.iter().map(|t| t.surface.as_str()).collect();
        for (token_start, token_end, entity_kind, canonical) in tag_tokens(&surfaces, dictionary) {
            spans.push(EntitySpan {
                doc_id: doc.doc_id.clone(),
                sentence_idx,
                token_start,
                token_end,
                entity_kind,
                canonical,
            });
        }
    }
    spans
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedEntity {
    pub kind: EntityKind,
    pub corpus_frequency: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedEntitySet {
    entities: BTreeMap<String, SeedEntity>,
}

impl SeedEntitySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, canonical: &str, kind: EntityKind, frequency: u64) {
        if frequency == 0 {
            return;
        }
        self.entities
            .entry(canonical.to_string())
            .and_modify(|e| e.corpus_frequency += frequency)
            .or_insert(SeedEntity { kind, corpus_frequency: frequency });
    }

    pub fn add_spans(&mut self, spans: &[EntitySpan]) {
        for s in spans {
            self.add(&s.canonical, s.entity_kind, 1);
        }
    }

    pub fn merge(&mut self, other: SeedEntitySet) {
        for (k, e) in other.entities {
            self.add(&k, e.kind, e.corpus_frequency);
        }
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn get(&self, canonical: &str) -> Option<&SeedEntity> {
        self.entities.get(canonical)
    }

    pub fn contains(&self, canonical: &str) -> bool {
        self.entities.contains_key(canonical)
    }

    /// Frequency descending, canonical ascending.
    pub fn ordered(&self) -> Vec<(&str, SeedEntity)> {
        let mut v: Vec<(&str, SeedEntity)> =
            self.entities.iter().map(|(k, e)| (k.as_str(), *e)).collect();
        v.sort_by(|a, b| b.1.corpus_frequency.cmp(&a.1.corpus_frequency).then(a.0.cmp(b.0)));
        v
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SeedEntity)> {
        self.entities.iter().map(|(k, e)| (k.as_str(), e))
    }
}

pub fn extract_corpus_entities<'a>(
    docs: impl IntoIterator<Item = &'a TokenizedDocument>,
    dictionary: &Dictionary,
) -> Result<SeedEntitySet> {
    let mut set = SeedEntitySet::new();
    let mut seen_any = false;
    for doc in docs {
        seen_any |= doc.token_count() > 0;
        set.add_spans(&tag_entities(doc, dictionary));
    }
    if !seen_any {
        return Err(Error::EmptyCorpus);
    }
    Ok(set)
}
