//! Shared fixtures for the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use melt_core::text::{Token, TokenizedDocument};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn melt(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_melt"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("spawn melt")
}

/// Copies the bundled toy inputs into `dir` so runs there use only
/// relative paths.
pub fn stage_toy_inputs(dir: &Path) {
    copy_tree(&data_dir(), dir);
}

fn copy_tree(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let name = e.file_name();
        if name == "out" {
            continue;
        }
        let target = to.join(&name);
        if e.file_type().unwrap().is_dir() {
            copy_tree(&e.path(), &target);
        } else {
            std::fs::copy(e.path(), target).unwrap();
        }
    }
}

/// A tokenized document built directly from words, one space between
/// tokens and sentences.
pub fn doc(id: &str, sentences: &[Vec<String>]) -> TokenizedDocument {
    let mut text = String::new();
    let mut out = Vec::with_capacity(sentences.len());
    for s in sentences {
        let mut sent = Vec::with_capacity(s.len());
        for w in s {
            if !text.is_empty() {
                text.push(' ');
            }
            let start = text.len();
            text.push_str(w);
            sent.push(Token { surface: w.clone(), char_start: start, char_end: text.len() });
        }
        out.push(sent);
    }
    TokenizedDocument { doc_id: id.into(), text, sentences: out }
}

/// A synthetic corpus for the masking checks: one sentence per document,
/// every document short enough to become exactly one sequence.
pub struct MaskCorpus {
    pub docs: Vec<TokenizedDocument>,
    /// Entity (possibly multi-word, space separated) -> pseudo degree.
    pub degrees: BTreeMap<String, u64>,
    pub frequencies: BTreeMap<String, u64>,
    /// Gold token stream with BIO tags, in document order.
    pub tagged: Vec<(String, String)>,
    pub entity_tokens: usize,
    pub total_tokens: usize,
}

/// `n_docs` documents with roughly `density` of their tokens inside one of
/// `n_entities` entities. Every fifth entity is a two-word phrase.
pub fn mask_corpus(seed: u64, n_docs: usize, n_entities: usize, density: f64) -> MaskCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entities: Vec<Vec<String>> = (0..n_entities)
        .map(|i| {
            if i % 5 == 4 {
                vec![format!("alloy{i}"), format!("phase{i}")]
            } else {
                vec![format!("ent{i}")]
            }
        })
        .collect();
    let fillers: Vec<String> = (0..400).map(|i| format!("w{i}")).collect();
    let mut docs = Vec::with_capacity(n_docs);
    let mut tagged = Vec::new();
    let mut freq: BTreeMap<String, u64> = BTreeMap::new();
    let mut entity_tokens = 0;
    for d in 0..n_docs {
        let len = rng.gen_range(40..=120);
        let mut words: Vec<String> = Vec::with_capacity(len + 1);
        while words.len() < len {
            if rng.gen::<f64>() < density {
                // Skewed entity choice so strata differ in frequency.
                let e = &entities[((rng.gen::<f64>().powi(2)) * n_entities as f64) as usize];
                *freq.entry(e.join(" ")).or_insert(0) += 1;
                for (j, w) in e.iter().enumerate() {
                    tagged.push((w.clone(), if j == 0 { "B-MAT" } else { "I-MAT" }.to_string()));
                    words.push(w.clone());
                    entity_tokens += 1;
                }
            } else {
                let w = fillers.choose(&mut rng).unwrap().clone();
                tagged.push((w.clone(), "O".into()));
                words.push(w);
            }
        }
        docs.push(doc(&format!("d{d:05}"), &[words]));
    }
    let total_tokens = tagged.len();
    let degrees = entities.iter().map(|e| (e.join(" "), rng.gen_range(1..40))).collect();
    let frequencies = entities.iter().map(|e| e.join(" ")).map(|e| {
        let f = freq.get(&e).copied().unwrap_or(0);
        (e, f)
    });
    MaskCorpus {
        docs,
        degrees,
        frequencies: frequencies.collect(),
        tagged,
        entity_tokens,
        total_tokens,
    }
}

/// Generic-domain counts that make every filler word common and every
/// entity word unseen.
pub fn generic_counts() -> BTreeMap<String, u64> {
    (0..400).map(|i| (format!("w{i}"), 1_000_000)).collect()
}

/// Every file under `dir` (relative path -> bytes).
pub fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for rel in melt::hash::list_files(dir).unwrap() {
        out.insert(rel.clone(), std::fs::read(dir.join(&rel)).unwrap());
    }
    out
}
