use alloc::vec::Vec;

use rand::Rng;

use super::sgns::{sgns_step_store, RowStore, SgnsScratch};
use super::{subsample_keep_probability, EmbeddingHyperparams, EmbeddingTable, NegativeSampler};
use crate::rng::{derive, seeded};
use crate::vocab::Vocabulary;
use crate::{Error, Result};

const STREAM_INIT: u64 = 1;
const STREAM_TRAIN: u64 = 2;

/// Learning rate as a function of words processed so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub start: f64,
    pub end: f64,
    pub total_words: u64,
}

impl LrSchedule {
    pub fn new(hp: &EmbeddingHyperparams, words_per_epoch: u64) -> Self {
        LrSchedule {
            start: hp.learning_rate,
            end: hp.min_learning_rate(),
            total_words: words_per_epoch.saturating_mul(hp.epochs as u64).max(1),
        }
    }

    pub fn at(&self, processed: u64) -> f64 {
        let progress = (processed as f64 / self.total_words as f64).min(1.0);
        self.start - (self.start - self.end) * progress
    }
}

/// Fixed inputs shared by every worker of one training run.
#[derive(Debug, Clone)]
pub struct TrainPass<'a> {
    pub hp: &'a EmbeddingHyperparams,
    pub sampler: &'a NegativeSampler,
    /// Per-word subsampling keep probability.
    pub keep: &'a [f64],
}

impl<'a> TrainPass<'a> {
    pub fn keep_probabilities(vocab: &Vocabulary, threshold: f64) -> Vec<f64> {
        let total = vocab.total_tokens().max(1);
        vocab.entries().iter().map(|e| subsample_keep_probability(e.count, total, threshold)).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub epoch_mean_loss: Vec<f64>,
    pub epoch_pairs: Vec<u64>,
}

/// One pass over `sentences` (already encoded as vocabulary indices).
///
/// Per occurrence: subsampling, then a window size drawn uniformly from
/// `1..=window`, then one SGNS step per context position with
/// `hp.negatives` draws that avoid the context word. `lr_at` is told how
/// many words each sentence contributed and returns the rate to use.
/// Returns the summed loss and the number of (center, context) pairs.
pub fn train_pass<'s, S, R>(
    store: &mut S,
    pass: &TrainPass<'_>,
    sentences: impl IntoIterator<Item = &'s [usize]>,
    rng: &mut R,
    lr_at: &mut dyn FnMut(u64) -> f64,
    scratch: &mut SgnsScratch,
) -> (f64, u64)
where
    S: RowStore + ?Sized,
    R: Rng + ?Sized,
{
    let mut kept = Vec::new();
    let mut negatives = Vec::with_capacity(pass.hp.negatives);
    let (mut loss, mut pairs) = (0.0, 0u64);
    for sentence in sentences {
        let lr = lr_at(sentence.len() as u64);
        kept.clear();
        for &w in sentence {
            let p = pass.keep[w];
            if p >= 1.0 || rng.gen::<f64>() < p {
                kept.push(w);
            }
        }
        for pos in 0..kept.len() {
            let b = rng.gen_range(1..=pass.hp.window);
            let lo = pos.saturating_sub(b);
            let hi = (pos + b).min(kept.len() - 1);
            for ctx_pos in lo..=hi {
                if ctx_pos == pos {
                    continue;
                }
                let (center, context) = (kept[pos], kept[ctx_pos]);
                negatives.clear();
                for _ in 0..pass.hp.negatives {
                    if let Some(n) = pass.sampler.sample_excluding(rng, context) {
                        negatives.push(n);
                    }
                }
                loss += sgns_step_store(store, center, context, &negatives, lr, scratch);
                pairs += 1;
            }
        }
    }
    (loss, pairs)
}

/// Single-worker SGNS training; bit-deterministic for a fixed `hp.seed`.
pub fn train_embeddings(
    sentences: &[Vec<usize>],
    vocab: Vocabulary,
    hp: &EmbeddingHyperparams,
) -> Result<(EmbeddingTable, TrainReport)> {
    hp.validate()?;
    let words: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    if words == 0 || vocab.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(&index) = sentences.iter().flatten().find(|&&i| i >= vocab.len()) {
        return Err(Error::IndexOutOfRange { index, len: vocab.len() });
    }
    let counts: Vec<u64> = vocab.entries().iter().map(|e| e.count).collect();
    let sampler = NegativeSampler::new(&counts);
    let keep = TrainPass::keep_probabilities(&vocab, hp.subsample_threshold);
    let mut table = EmbeddingTable::initialized(vocab, hp.dim, derive(hp.seed, STREAM_INIT, 0));
    let pass = TrainPass { hp, sampler: &sampler, keep: &keep };
    let schedule = LrSchedule::new(hp, words);
    let mut rng = seeded(derive(hp.seed, STREAM_TRAIN, 0));
    let mut scratch = SgnsScratch::new(hp.dim);
    let mut processed = 0u64;
    let mut report = TrainReport::default();
    for _ in 0..hp.epochs {
        let mut lr_at = |n: u64| {
            let lr = schedule.at(processed);
            processed += n;
            lr
        };
        let (loss, pairs) = train_pass(
            &mut table,
            &pass,
            sentences.iter().map(Vec::as_slice),
            &mut rng,
            &mut lr_at,
            &mut scratch,
        );
        report.epoch_mean_loss.push(if pairs == 0 { 0.0 } else { loss / pairs as f64 });
        report.epoch_pairs.push(pairs);
    }
    Ok((table, report))
}
