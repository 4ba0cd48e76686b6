//! Corpus reading, ingestion and seed extraction.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use log::{info, warn};
use melt_core::chem::{tag_entities, Dictionary, SeedEntitySet};
use melt_core::formula::is_formula;
use melt_core::text::{tokenize_document, TokenizedDocument};
use melt_core::vocab::{Vocabulary, WordCounts};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub doc_id: String,
    pub text: String,
    pub source_path: String,
}

#[derive(Debug, Default)]
pub struct Corpus {
    pub docs: Vec<RawDocument>,
    /// Sources that were not valid UTF-8.
    pub skipped: Vec<String>,
}

#[derive(Deserialize)]
struct JsonDoc {
    doc_id: String,
    text: String,
}

/// Reads a directory of `.txt` files (recursively, in path order) or a
/// JSONL file of `{"doc_id", "text"}` objects.
pub fn read_corpus(path: &Path) -> Result<Corpus> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let corpus = if meta.is_dir() { read_dir_corpus(path)? } else { read_jsonl_corpus(path)? };
    let mut ids: Vec<&str> = corpus.docs.iter().map(|d| d.doc_id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Input(format!("duplicate doc_id {:?}", w[0])));
    }
    Ok(corpus)
}

fn collect_txt(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_dir() {
            collect_txt(&p, out)?;
        } else if p.extension().is_some_and(|e| e == "txt") {
            out.push(p);
        }
    }
    Ok(())
}

fn read_dir_corpus(dir: &Path) -> Result<Corpus> {
    let mut files = Vec::new();
    collect_txt(dir, &mut files)?;
    files.sort();
    let mut corpus = Corpus::default();
    for f in files {
        let rel = f.strip_prefix(dir).unwrap_or(&f).with_extension("");
        let doc_id = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        let bytes = fs::read(&f).map_err(|e| Error::io(&f, e))?;
        let source_path = f.display().to_string();
        match String::from_utf8(bytes) {
            Ok(text) => corpus.docs.push(RawDocument { doc_id, text, source_path }),
            Err(_) => {
                warn!("skipping {source_path}: not valid UTF-8");
                corpus.skipped.push(source_path);
            }
        }
    }
    Ok(corpus)
}

fn read_jsonl_corpus(path: &Path) -> Result<Corpus> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut corpus = Corpus::default();
    for (i, line) in BufReader::new(file).split(b'\n').enumerate() {
        let bytes = line.map_err(|e| Error::io(path, e))?;
        let source_path = format!("{}:{}", path.display(), i + 1);
        let Ok(line) = String::from_utf8(bytes) else {
            warn!("skipping {source_path}: not valid UTF-8");
            corpus.skipped.push(source_path);
            continue;
        };
        if line.trim().is_empty() {
            continue;
        }
        let doc: JsonDoc = serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        corpus.docs.push(RawDocument { doc_id: doc.doc_id, text: doc.text, source_path });
    }
    Ok(corpus)
}

#[derive(Debug)]
pub struct Ingested {
    pub docs: Vec<TokenizedDocument>,
    pub vocab: Vocabulary,
    /// Documents empty after normalization.
    pub dropped: Vec<String>,
}

/// Tokenizes documents in parallel and counts words with a per-document
/// map followed by an in-order merge.
pub fn ingest(raw: &[RawDocument], min_count: u64) -> Result<Ingested> {
    let tokenized: Vec<Option<TokenizedDocument>> =
        raw.par_iter().map(|d| tokenize_document(&d.doc_id, &d.text)).collect();
    let mut docs = Vec::with_capacity(raw.len());
    let mut dropped = Vec::new();
    for (d, t) in raw.iter().zip(tokenized) {
        match t {
            Some(t) => docs.push(t),
            None => {
                info!("dropping {}: empty after normalization", d.doc_id);
                dropped.push(d.doc_id.clone());
            }
        }
    }
    if docs.is_empty() {
        return Err(Error::Input("empty corpus: no document has text after normalization".into()));
    }
    let partial: Vec<WordCounts> = docs
        .par_iter()
        .map(|d| {
            let mut c = WordCounts::new();
            d.surfaces().for_each(|s| c.add_with(s, &is_formula));
            c
        })
        .collect();
    let mut counts = WordCounts::new();
    partial.into_iter().for_each(|c| counts.merge(c));
    let vocab = Vocabulary::from_counts(counts, min_count)?;
    Ok(Ingested { docs, vocab, dropped })
}

pub fn extract(docs: &[TokenizedDocument], dict: &Dictionary) -> Result<SeedEntitySet> {
    if docs.iter().all(|d| d.token_count() == 0) {
        return Err(melt_core::Error::EmptyCorpus.into());
    }
    let partial: Vec<SeedEntitySet> = docs
        .par_iter()
        .map(|d| {
            let mut s = SeedEntitySet::new();
            s.add_spans(&tag_entities(d, dict));
            s
        })
        .collect();
    let mut seeds = SeedEntitySet::new();
    partial.into_iter().for_each(|s| seeds.merge(s));
    Ok(seeds)
}

pub fn read_dictionary(path: &Path) -> Result<Dictionary> {
    Ok(Dictionary::parse(&crate::formats::read_to_string(path)?))
}

/// Total token occurrences, including out-of-vocabulary ones.
pub fn total_tokens(docs: &[TokenizedDocument]) -> u64 {
    docs.iter().map(|d| d.token_count() as u64).sum()
}
