//! On-disk formats. Every writer is deterministic for a given input.
//!
//! | artifact        | layout                                              |
//! |-----------------|-----------------------------------------------------|
//! | vocabulary      | `word\tcount\tis_formula(0|1)`                      |
//! | tokens          | JSONL, one tokenized document per line              |
//! | seeds           | `canonical\tkind\tfrequency`                        |
//! | embeddings      | word2vec text (`V dim` header) or binary            |
//! | concept pairs   | `concept\tsubject\tobject`                          |
//! | graph edges     | `from\tto\tconcept\tsimilarity`                     |
//! | graph nodes     | `entity\tdegree\tis_seed(0|1)`                      |
//! | dataset         | JSONL masked examples                               |
//! | tagged corpus   | CoNLL `token\ttag`, blank lines between sentences   |
//! | frequency table | `word\tcount`                                       |
//!
//! The binary embedding layout is the classic word2vec one: an ASCII
//! header line `V dim\n`, then per word its UTF-8 bytes, one space,
//! `dim` little-endian f32 values and a newline.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use melt_core::chem::{EntityKind, SeedEntitySet};
use melt_core::embed::Embeddings;
use melt_core::graph::{ConceptSpec, Edge};
use melt_core::mask::MaskedExample;
use melt_core::text::{Token, TokenizedDocument};
use melt_core::vocab::VocabEntry;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `%g`-style formatting with `digits` significant digits.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let prec = (digits as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.prec$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn fmt_g6(x: f64) -> String {
    fmt_sig(x, 6)
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(bytes).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = read_to_string(path)?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').to_string()))
        .collect())
}

fn fields<'a>(path: &Path, line: usize, l: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = l.split('\t').collect();
    if f.len() != n {
        return Err(Error::parse(path, line, format!("expected {n} tab-separated fields, found {}", f.len())));
    }
    Ok(f)
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: usize, s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::parse(path, line, format!("invalid {what} {s:?}")))
}

fn parse_flag(path: &Path, line: usize, s: &str) -> Result<bool> {
    match s.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::parse(path, line, format!("expected 0 or 1, found {other:?}"))),
    }
}

macro_rules! wr {
    ($path:expr, $w:expr, $($arg:tt)*) => {
        writeln!($w, $($arg)*).map_err(|e| Error::io($path, e))?
    };
}

// Vocabulary

pub fn write_vocab(path: &Path, entries: &[VocabEntry]) -> Result<()> {
    let mut w = create(path)?;
    for e in entries {
        wr!(path, w, "{}\t{}\t{}", e.word, e.count, u8::from(e.is_formula));
    }
    finish(path, w)
}

pub fn read_vocab(path: &Path) -> Result<Vec<VocabEntry>> {
    data_lines(path)?
        .into_iter()
        .map(|(n, l)| {
            let f = fields(path, n, &l, 3)?;
            Ok(VocabEntry {
                word: f[0].to_string(),
                count: parse_num(path, n, f[1], "count")?,
                is_formula: parse_flag(path, n, f[2])?,
            })
        })
        .collect()
}

// Tokens

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TokenRecord {
    surface: String,
    char_start: usize,
    char_end: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DocRecord {
    doc_id: String,
    text: String,
    sentences: Vec<Vec<TokenRecord>>,
}

pub fn write_tokens(path: &Path, docs: &[TokenizedDocument]) -> Result<()> {
    let mut w = create(path)?;
    for d in docs {
        let rec = DocRecord {
            doc_id: d.doc_id.clone(),
            text: d.text.clone(),
            sentences: d
                .sentences
                .iter()
                .map(|s| {
                    s.iter()
                        .map(|t| TokenRecord {
                            surface: t.surface.clone(),
                            char_start: t.char_start,
                            char_end: t.char_end,
                        })
                        .collect()
                })
                .collect(),
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| Error::Input(e.to_string()))?;
        wr!(path, w, "");
    }
    finish(path, w)
}

pub fn read_tokens(path: &Path) -> Result<Vec<TokenizedDocument>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DocRecord = serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        docs.push(TokenizedDocument {
            doc_id: rec.doc_id,
            text: rec.text,
            sentences: rec
                .sentences
                .into_iter()
                .map(|s| {
                    s.into_iter()
                        .map(|t| Token { surface: t.surface, char_start: t.char_start, char_end: t.char_end })
                        .collect()
                })
                .collect(),
        });
    }
    Ok(docs)
}

// Seeds

pub fn write_seeds(path: &Path, seeds: &SeedEntitySet) -> Result<()> {
    let mut w = create(path)?;
    for (canonical, s) in seeds.ordered() {
        wr!(path, w, "{canonical}\t{}\t{}", s.kind, s.corpus_frequency);
    }
    finish(path, w)
}

pub fn read_seeds(path: &Path) -> Result<SeedEntitySet> {
    let mut set = SeedEntitySet::new();
    for (n, l) in data_lines(path)? {
        let f = fields(path, n, &l, 3)?;
        let kind: EntityKind = f[1].parse().map_err(|_| Error::parse(path, n, format!("unknown kind {:?}", f[1])))?;
        set.add(f[0], kind, parse_num(path, n, f[2], "frequency")?);
    }
    Ok(set)
}

// Embeddings

pub fn write_embeddings_text(path: &Path, emb: &Embeddings) -> Result<()> {
    let mut w = create(path)?;
    wr!(path, w, "{} {}", emb.len(), emb.dim());
    let mut line = String::new();
    for i in 0..emb.len() {
        line.clear();
        line.push_str(emb.word(i));
        for &x in emb.row(i) {
            line.push(' ');
            line.push_str(&fmt_g6(x));
        }
        wr!(path, w, "{line}");
    }
    finish(path, w)
}

pub fn write_embeddings_binary(path: &Path, emb: &Embeddings) -> Result<()> {
    let mut w = create(path)?;
    wr!(path, w, "{} {}", emb.len(), emb.dim());
    for i in 0..emb.len() {
        let mut buf = Vec::with_capacity(emb.word(i).len() + 2 + 4 * emb.dim());
        buf.extend_from_slice(emb.word(i).as_bytes());
        buf.push(b' ');
        for &x in emb.row(i) {
            buf.extend_from_slice(&(x as f32).to_le_bytes());
        }
        buf.push(b'\n');
        w.write_all(&buf).map_err(|e| Error::io(path, e))?;
    }
    finish(path, w)
}

/// Files ending in `.bin` are read as binary, anything else as text.
pub fn read_embeddings(path: &Path) -> Result<Embeddings> {
    if path.extension().is_some_and(|e| e == "bin") {
        read_embeddings_binary(path)
    } else {
        read_embeddings_text(path)
    }
}

fn parse_header(path: &Path, header: &str) -> Result<(usize, usize)> {
    let mut it = header.split_whitespace();
    let (Some(v), Some(d), None) = (it.next(), it.next(), it.next()) else {
        return Err(Error::parse(path, 1, "expected header `<vocab_size> <dim>`"));
    };
    Ok((parse_num(path, 1, v, "vocabulary size")?, parse_num(path, 1, d, "dimension")?))
}

fn read_embeddings_text(path: &Path) -> Result<Embeddings> {
    let text = read_to_string(path)?;
    let mut lines = text.lines();
    let (v, dim) = parse_header(path, lines.next().unwrap_or(""))?;
    let mut words = Vec::with_capacity(v);
    let mut data = Vec::with_capacity(v * dim);
    for (i, l) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let mut it = l.split(' ');
        let word = it.next().unwrap_or("");
        let before = data.len();
        for x in it.filter(|s| !s.is_empty()) {
            data.push(parse_num::<f64>(path, i + 2, x, "vector component")?);
        }
        if data.len() - before != dim {
            return Err(Error::parse(path, i + 2, format!("expected {dim} components, found {}", data.len() - before)));
        }
        words.push(word.to_string());
    }
    if words.len() != v {
        return Err(Error::parse(path, 1, format!("header promises {v} rows, found {}", words.len())));
    }
    Ok(Embeddings::new(words, dim, data)?)
}

fn read_embeddings_binary(path: &Path) -> Result<Embeddings> {
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| Error::io(path, e))?;
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::parse(path, 1, "missing header"))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::parse(path, 1, "header is not UTF-8"))?;
    let (v, dim) = parse_header(path, header)?;
    let mut pos = nl + 1;
    let mut words = Vec::with_capacity(v);
    let mut data = Vec::with_capacity(v * dim);
    for row in 0..v {
        let bad = |msg: &str| Error::parse(path, row + 2, msg.to_string());
        let sp = bytes[pos..].iter().position(|&b| b == b' ').ok_or_else(|| bad("truncated word"))?;
        let word = std::str::from_utf8(&bytes[pos..pos + sp]).map_err(|_| bad("word is not UTF-8"))?;
        words.push(word.to_string());
        pos += sp + 1;
        let end = pos + 4 * dim;
        if end > bytes.len() {
            return Err(bad("truncated vector"));
        }
        data.extend(bytes[pos..end].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64));
        pos = end;
        if bytes.get(pos) == Some(&b'\n') {
            pos += 1;
        }
    }
    Ok(Embeddings::new(words, dim, data)?)
}

// Concept pairs

/// Concepts in order of first appearance.
pub fn read_concepts(path: &Path) -> Result<Vec<ConceptSpec>> {
    let mut out: Vec<ConceptSpec> = Vec::new();
    for (n, l) in data_lines(path)? {
        let f = fields(path, n, &l, 3)?;
        let pair = (f[1].trim().to_string(), f[2].trim().to_string());
        match out.iter_mut().find(|c| c.name == f[0]) {
            Some(c) => c.pairs.push(pair),
            None => out.push(ConceptSpec { name: f[0].to_string(), pairs: vec![pair] }),
        }
    }
    if out.is_empty() {
        return Err(Error::Input(format!("{}: no concept pairs", path.display())));
    }
    Ok(out)
}

// Graph

pub fn write_edges(path: &Path, edges: &[Edge]) -> Result<()> {
    let mut w = create(path)?;
    for e in edges {
        wr!(path, w, "{}\t{}\t{}\t{}", e.from, e.to, e.concept, fmt_g6(e.similarity));
    }
    finish(path, w)
}

pub fn read_edges(path: &Path) -> Result<Vec<Edge>> {
    data_lines(path)?
        .into_iter()
        .map(|(n, l)| {
            let f = fields(path, n, &l, 4)?;
            Ok(Edge {
                from: f[0].into(),
                to: f[1].into(),
                concept: f[2].into(),
                similarity: parse_num(path, n, f[3], "similarity")?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeRecord {
    pub degree: u64,
    pub is_seed: bool,
}

pub fn write_nodes(path: &Path, nodes: &BTreeMap<String, NodeRecord>) -> Result<()> {
    let mut w = create(path)?;
    for (entity, n) in nodes {
        wr!(path, w, "{entity}\t{}\t{}", n.degree, u8::from(n.is_seed));
    }
    finish(path, w)
}

pub fn read_nodes(path: &Path) -> Result<BTreeMap<String, NodeRecord>> {
    let mut out = BTreeMap::new();
    for (n, l) in data_lines(path)? {
        let f = fields(path, n, &l, 3)?;
        let rec = NodeRecord { degree: parse_num(path, n, f[1], "degree")?, is_seed: parse_flag(path, n, f[2])? };
        if out.insert(f[0].to_string(), rec).is_some() {
            return Err(Error::parse(path, n, format!("duplicate node {:?}", f[0])));
        }
    }
    Ok(out)
}

// Datasets

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: String,
    pub tokens: Vec<String>,
    pub masked_positions: Vec<usize>,
    pub targets: Vec<String>,
    pub stage: usize,
    pub strategy: String,
}

impl From<&MaskedExample> for ExampleRecord {
    fn from(ex: &MaskedExample) -> Self {
        ExampleRecord {
            id: ex.sequence_id.clone(),
            tokens: ex.tokens.clone(),
            masked_positions: ex.masked_positions.clone(),
            targets: ex.original_targets.clone(),
            stage: ex.stage,
            strategy: ex.strategy.clone(),
        }
    }
}

impl From<ExampleRecord> for MaskedExample {
    fn from(r: ExampleRecord) -> Self {
        MaskedExample {
            sequence_id: r.id,
            tokens: r.tokens,
            masked_positions: r.masked_positions,
            original_targets: r.targets,
            stage: r.stage,
            strategy: r.strategy,
        }
    }
}

pub fn write_examples(path: &Path, examples: &[MaskedExample]) -> Result<()> {
    let mut w = create(path)?;
    for ex in examples {
        serde_json::to_writer(&mut w, &ExampleRecord::from(ex)).map_err(|e| Error::Input(e.to_string()))?;
        wr!(path, w, "");
    }
    finish(path, w)
}

pub fn read_examples(path: &Path) -> Result<Vec<MaskedExample>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            let rec: ExampleRecord =
                serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
            out.push(rec.into());
        }
    }
    Ok(out)
}

// Tagged corpus and frequency tables

/// `(token, tag)` pairs in file order; blank lines and `-DOCSTART-` are
/// skipped.
pub fn read_conll(path: &Path) -> Result<Vec<(String, String)>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let l = l.trim_end_matches('\r');
        if l.trim().is_empty() || l.starts_with("-DOCSTART-") {
            continue;
        }
        let (tok, tag) = l
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected `token<TAB>tag`"))?;
        out.push((tok.to_string(), tag.trim().to_string()));
    }
    Ok(out)
}

pub fn read_counts(path: &Path) -> Result<BTreeMap<String, u64>> {
    let mut out = BTreeMap::new();
    for (n, l) in data_lines(path)? {
        let f = fields(path, n, &l, 2)?;
        *out.entry(f[0].to_string()).or_insert(0) += parse_num::<u64>(path, n, f[1], "count")?;
    }
    Ok(out)
}
