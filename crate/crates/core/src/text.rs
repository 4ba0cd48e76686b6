//! Text normalization, sentence segmentation and chemistry-aware
//! tokenization.
//!
//! Token offsets are UTF-8 byte offsets into the normalized document text,
//! so `&text[tok.char_start..tok.char_end] == tok.surface` always holds.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use unicode_normalization::UnicodeNormalization;

use crate::formula::parse_formula;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub char_start: usize,
    pub char_end: usize,
}

pub type Sentence = Vec<Token>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedDocument {
    pub doc_id: String,
    /// Normalized text the token offsets refer to.
    pub text: String,
    pub sentences: Vec<Sentence>,
}

impl TokenizedDocument {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> + '_ {
        self.sentences.iter().flatten().map(|t| t.surface.as_str())
    }
}

/// NFKC, subscript/superscript digits to ASCII, control characters dropped,
/// whitespace runs collapsed to one space, ends trimmed.
pub fn normalize_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.nfkc() {
        if c.is_whitespace() {
            pending_space = true;
        } else if c.is_control() {
            continue;
        } else {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    out
}

const ABBREVIATIONS: &[&str] = &[
    "al.", "fig.", "figs.", "e.g.", "i.e.", "vs.", "eq.", "eqs.", "ref.", "refs.", "cf.", "ca.",
    "approx.",
];

const CLOSERS_AFTER_TERMINATOR: &[char] = &[')', ']', '}', '"', '\'', '\u{2019}', '\u{201D}'];

/// Byte ranges of the sentences in `text`, trimmed of surrounding spaces.
pub fn sentence_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && CLOSERS_AFTER_TERMINATOR.contains(&chars[j].1) {
                j += 1;
            }
            let boundary = j < chars.len()
                && chars[j].1.is_whitespace()
                && chars[j + 1..]
                    .iter()
                    .find(|(_, ch)| !ch.is_whitespace())
                    .is_some_and(|&(_, ch)| ch.is_uppercase() || ch.is_ascii_digit());
            if boundary && !(c == '.' && ends_with_abbreviation(&text[start..pos + 1])) {
                let end = if j < chars.len() { chars[j].0 } else { text.len() };
                push_trimmed(&mut spans, text, start..end);
                start = end;
            }
            i = j;
        } else {
            i += 1;
        }
    }
    push_trimmed(&mut spans, text, start..text.len());
    spans
}

fn ends_with_abbreviation(prefix: &str) -> bool {
    let word = prefix.rsplit(char::is_whitespace).next().unwrap_or("");
    let word = word.trim_start_matches(['(', '[', '"', '\'']);
    ABBREVIATIONS.iter().any(|a| word.eq_ignore_ascii_case(a))
}

fn push_trimmed(spans: &mut Vec<Range<usize>>, text: &str, range: Range<usize>) {
    let slice = &text[range.clone()];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    if lead + trail < slice.len() {
        spans.push(range.start + lead..range.end - trail);
    }
}

/// Splits normalized text into sentences. Text without a terminator is one
/// sentence; empty text yields nothing.
pub fn split_sentences(text: &str) -> Vec<&str> {
    sentence_spans(text).into_iter().map(|r| &text[r]).collect()
}

const OPENERS: &[(char, char)] = &[('(', ')'), ('[', ']'), ('{', '}')];
const QUOTES: &[char] = &['"', '\'', '\u{2018}', '\u{2019}', '\u{201C}', '\u{201D}'];
const TRAILING: &[char] = &['.', ',', ';', ':', '!', '?'];

/// Tokenizes one normalized sentence; offsets are relative to `sentence`.
pub fn tokenize(sentence: &str) -> Vec<Token> {
    tokenize_at(sentence, 0)
}

/// Tokenizes `text`, shifting offsets by `base`.
pub fn tokenize_at(text: &str, base: usize) -> Vec<Token> {
    let mut out = Vec::new();
    let mut chunk_start = None;
    for (i, c) in text.char_indices().chain(core::iter::once((text.len(), ' '))) {
        if c.is_whitespace() {
            if let Some(s) = chunk_start.take() {
                split_chunk(&text[s..i], base + s, &mut out);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    out
}

fn count(s: &str, c: char) -> usize {
    s.chars().filter(|&x| x == c).count()
}

fn balanced(s: &str, open: char, close: char) -> bool {
    let mut depth = 0i32;
    for c in s.chars() {
        if c == open {
            depth += 1;
        } else if c == close {
            depth -= 1;
            if depth < 0 {
                return false;
            }
        }
    }
    depth == 0
}

fn split_chunk(chunk: &str, offset: usize, out: &mut Vec<Token>) {
    let emit = |out: &mut Vec<Token>, lo: usize, hi: usize| {
        out.push(Token {
            surface: chunk[lo..hi].to_string(),
            char_start: offset + lo,
            char_end: offset + hi,
        })
    };
    let (mut lo, mut hi) = (0, chunk.len());
    let mut trailing: Vec<(usize, usize)> = Vec::new();
    while lo < hi {
        let core = &chunk[lo..hi];
        let first = core.chars().next().unwrap_or(' ');
        let last = core.chars().next_back().unwrap_or(' ');
        let (fl, ll) = (first.len_utf8(), last.len_utf8());
        let wrapper = OPENERS.iter().find(|(o, _)| *o == first).copied();
        if let Some((open, close)) = wrapper {
            if core.len() > fl && last == close && balanced(&core[fl..core.len() - ll], open, close)
            {
                emit(out, lo, lo + fl);
                trailing.push((hi - ll, hi));
                lo += fl;
                hi -= ll;
                continue;
            }
        }
        if parse_formula(core).is_some() {
            break;
        }
        if let Some((open, close)) = wrapper {
            if count(core, open) > count(core, close) {
                emit(out, lo, lo + fl);
                lo += fl;
                continue;
            }
        }
        if let Some(&(open, close)) = OPENERS.iter().find(|(_, c)| *c == last) {
            if count(core, close) > count(core, open) {
                trailing.push((hi - ll, hi));
                hi -= ll;
                continue;
            }
        }
        if TRAILING.contains(&last) || QUOTES.contains(&last) {
            trailing.push((hi - ll, hi));
            hi -= ll;
            continue;
        }
        if QUOTES.contains(&first) {
            emit(out, lo, lo + fl);
            lo += fl;
            continue;
        }
        break;
    }
    if lo < hi {
        emit(out, lo, hi);
    }
    for &(s, e) in trailing.iter().rev() {
        emit(out, s, e);
    }
}

/// Normalizes, segments and tokenizes one document. Returns `None` when the
/// normalized text is empty.
pub fn tokenize_document(doc_id: &str, raw: &str) -> Option<TokenizedDocument> {
    let text = normalize_text(raw);
    if text.is_empty() {
        return None;
    }
    let sentences = sentence_spans(&text)
        .into_iter()
        .map(|r| tokenize_at(&text[r.clone()], r.start))
        .filter(|s| !s.is_empty())
        .collect();
    Some(TokenizedDocument { doc_id: doc_id.to_string(), text, sentences })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn surfaces(s: &str) -> Vec<String> {
        tokenize(s).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn normalizes_subscripts_and_whitespace() {
        assert_eq!(normalize_text("H₂O  is\twater"), "H2O is water");
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text("LiCoO₂ cathode"), "LiCoO2 cathode");
        assert_eq!(normalize_text("  x\u{0007}y \n z  "), "xy z");
        assert_eq!(normalize_text("m²"), "m2");
    }

    #[test]
    fn splits_sentences() {
        assert_eq!(
            split_sentences("It melts at 2.5 K. New phase forms."),
            vec!["It melts at 2.5 K.", "New phase forms."]
        );
        assert_eq!(split_sentences("See Fig. 3 for details."), vec!["See Fig. 3 for details."]);
        assert_eq!(split_sentences("no terminator here"), vec!["no terminator here"]);
        assert_eq!(
            split_sentences("Smith et al. Reported it. A pH 7.4 buffer was used."),
            vec!["Smith et al. Reported it.", "A pH 7.4 buffer was used."]
        );
        assert_eq!(split_sentences("Is it stable? Yes! 3 samples."), vec![
            "Is it stable?",
            "Yes!",
            "3 samples."
        ]);
        assert_eq!(split_sentences("ends lower. next one"), vec!["ends lower. next one"]);
        assert!(split_sentences("").is_empty());
    }

    #[test]
    fn tokenizes_punctuation_but_keeps_formulas() {
        assert_eq!(surfaces("LiCoO2 is a cathode."), vec!["LiCoO2", "is", "a", "cathode", "."]);
        assert_eq!(
            surfaces("Ba(OH)2 dissolves (slowly)."),
            vec!["Ba(OH)2", "dissolves", "(", "slowly", ")", "."]
        );
        assert!(surfaces("").is_empty());
        assert_eq!(surfaces("(Ba(OH)2), then"), vec!["(", "Ba(OH)2", ")", ",", "then"]);
        assert_eq!(surfaces("poly-ethylene-oxide, 2.5"), vec!["poly-ethylene-oxide", ",", "2.5"]);
        assert_eq!(surfaces("CuSO4·5H2O."), vec!["CuSO4·5H2O", "."]);
        assert_eq!(surfaces("f(x) \"quoted\""), vec!["f(x)", "\"", "quoted", "\""]);
        assert_eq!(surfaces("(OH)2 (OH)(CO3)"), vec!["(OH)2", "(OH)(CO3)"]);
    }

    #[test]
    fn document_offsets_round_trip() {
        let doc = tokenize_document("d1", "H₂O  boils (at 373 K). Then Ba(OH)2, e.g. here.").unwrap();
        assert_eq!(doc.sentences.len(), 2);
        for tok in doc.sentences.iter().flatten() {
            assert_eq!(&doc.text[tok.char_start..tok.char_end], tok.surface);
            assert!(tok.char_end > tok.char_start);
        }
        assert!(tokenize_document("d2", " \t ").is_none());
    }
}
