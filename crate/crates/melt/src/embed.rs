//! Embedding training over tokenized documents, single- or multi-worker.
//!
//! Multi-worker training is hogwild: every worker reads and writes the
//! shared matrices through relaxed atomics without locking, so races lose
//! occasional updates and results vary run to run. One worker delegates to
//! the deterministic core trainer.

use std::sync::atomic::{AtomicU64, Ordering};

use melt_core::embed::{
    train_embeddings, train_pass, Embeddings, EmbeddingHyperparams, EmbeddingTable, LrSchedule,
    NegativeSampler, RowStore, SgnsScratch, TrainPass, TrainReport,
};
use melt_core::rng::{derive, seeded};
use melt_core::text::TokenizedDocument;
use melt_core::vocab::{VocabEntry, Vocabulary};

use crate::error::{Error, Result};

const STREAM_INIT: u64 = 1;
const STREAM_WORKER: u64 = 3;

/// Two `rows x dim` f64 matrices stored as bit patterns in atomics.
pub struct AtomicTable {
    dim: usize,
    rows: usize,
    input: Vec<AtomicU64>,
    output: Vec<AtomicU64>,
}

impl AtomicTable {
    pub fn from_table(t: &EmbeddingTable) -> Self {
        let conv = |v: &[f64]| v.iter().map(|x| AtomicU64::new(x.to_bits())).collect();
        AtomicTable { dim: t.dim, rows: t.rows(), input: conv(&t.input), output: conv(&t.output) }
    }

    pub fn write_back(&self, t: &mut EmbeddingTable) {
        for (dst, src) in t.input.iter_mut().zip(&self.input) {
            *dst = f64::from_bits(src.load(Ordering::Relaxed));
        }
        for (dst, src) in t.output.iter_mut().zip(&self.output) {
            *dst = f64::from_bits(src.load(Ordering::Relaxed));
        }
    }

    pub fn handle(&self) -> SharedRows<'_> {
        SharedRows(self)
    }
}

/// A worker's view of an [`AtomicTable`].
pub struct SharedRows<'a>(&'a AtomicTable);

fn read(cells: &[AtomicU64], buf: &mut [f64]) {
    for (b, c) in buf.iter_mut().zip(cells) {
        *b = f64::from_bits(c.load(Ordering::Relaxed));
    }
}

// Load-add-store, not a CAS loop: concurrent writers may drop each other's
// update, which SGNS tolerates.
fn add(cells: &[AtomicU64], scale: f64, delta: &[f64]) {
    for (c, d) in cells.iter().zip(delta) {
        let x = f64::from_bits(c.load(Ordering::Relaxed));
        c.store((x + scale * d).to_bits(), Ordering::Relaxed);
    }
}

impl RowStore for SharedRows<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }

    fn rows(&self) -> usize {
        self.0.rows
    }

    fn read_input(&self, row: usize, buf: &mut [f64]) {
        let d = self.0.dim;
        read(&self.0.input[row * d..(row + 1) * d], buf);
    }

    fn read_output(&self, row: usize, buf: &mut [f64]) {
        let d = self.0.dim;
        read(&self.0.output[row * d..(row + 1) * d], buf);
    }

    fn add_input(&mut self, row: usize, scale: f64, delta: &[f64]) {
        let d = self.0.dim;
        add(&self.0.input[row * d..(row + 1) * d], scale, delta);
    }

    fn add_output(&mut self, row: usize, scale: f64, delta: &[f64]) {
        let d = self.0.dim;
        add(&self.0.output[row * d..(row + 1) * d], scale, delta);
    }
}

/// Encodes every sentence against the vocabulary, dropping unknown words.
pub fn encode_corpus(docs: &[TokenizedDocument], vocab: &Vocabulary) -> Vec<Vec<usize>> {
    docs.iter()
        .flat_map(|d| d.sentences.iter())
        .map(|s| vocab.encode(s.iter().map(|t| t.surface.as_str())))
        .filter(|s| !s.is_empty())
        .collect()
}

pub fn train(
    docs: &[TokenizedDocument],
    entries: Vec<VocabEntry>,
    hp: &EmbeddingHyperparams,
    workers: usize,
) -> Result<(Embeddings, TrainReport)> {
    let total = crate::corpus::total_tokens(docs);
    let vocab = Vocabulary::from_entries(entries, total);
    let sentences = encode_corpus(docs, &vocab);
    let (table, report) = if workers <= 1 {
        train_embeddings(&sentences, vocab, hp)?
    } else {
        train_hogwild(&sentences, vocab, hp, workers)?
    };
    if !table.is_finite() {
        return Err(Error::Validation("training diverged: non-finite embedding values".into()));
    }
    Ok((table.to_embeddings(), report))
}

/// Multi-worker training. Sentences are split into contiguous chunks, one
/// per worker; the learning rate follows the global word count.
pub fn train_hogwild(
    sentences: &[Vec<usize>],
    vocab: Vocabulary,
    hp: &EmbeddingHyperparams,
    workers: usize,
) -> Result<(EmbeddingTable, TrainReport)> {
    hp.validate()?;
    let words: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    if words == 0 || vocab.is_empty() {
        return Err(melt_core::Error::EmptyCorpus.into());
    }
    if let Some(&index) = sentences.iter().flatten().find(|&&i| i >= vocab.len()) {
        return Err(melt_core::Error::IndexOutOfRange { index, len: vocab.len() }.into());
    }
    let counts: Vec<u64> = vocab.entries().iter().map(|e| e.count).collect();
    let sampler = NegativeSampler::new(&counts);
    let keep = TrainPass::keep_probabilities(&vocab, hp.subsample_threshold);
    let mut table = EmbeddingTable::initialized(vocab, hp.dim, derive(hp.seed, STREAM_INIT, 0));
    let shared = AtomicTable::from_table(&table);
    let pass = TrainPass { hp, sampler: &sampler, keep: &keep };
    let schedule = LrSchedule::new(hp, words);
    let processed = AtomicU64::new(0);
    let chunk = sentences.len().div_ceil(workers).max(1);
    let mut report = TrainReport::default();
    for epoch in 0..hp.epochs {
        let results: Vec<(f64, u64)> = std::thread::scope(|s| {
            let handles: Vec<_> = sentences
                .chunks(chunk)
                .enumerate()
                .map(|(w, part)| {
                    let (shared, pass, processed) = (&shared, &pass, &processed);
                    s.spawn(move || {
                        let mut rng = seeded(derive(hp.seed, STREAM_WORKER, (epoch * workers + w) as u64));
                        let mut scratch = SgnsScratch::new(hp.dim);
                        let mut lr_at = |n: u64| {
                            let done = processed.fetch_add(n, Ordering::Relaxed);
                            schedule.at(done)
                        };
                        let mut store = shared.handle();
                        train_pass(&mut store, pass, part.iter().map(Vec::as_slice), &mut rng, &mut lr_at, &mut scratch)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let loss: f64 = results.iter().map(|r| r.0).sum();
        let pairs: u64 = results.iter().map(|r| r.1).sum();
        report.epoch_mean_loss.push(if pairs == 0 { 0.0 } else { loss / pairs as f64 });
        report.epoch_pairs.push(pairs);
    }
    shared.write_back(&mut table);
    Ok((table, report))
}
