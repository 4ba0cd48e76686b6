//! Skip-gram with negative sampling (SGNS) and cosine search.

mod sampler;
mod search;
mod sgns;
mod train;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

pub use sampler::{subsample_keep_probability, NegativeSampler, UNIGRAM_POWER};
pub use search::{cosine_similarity, dot, l2_norm, nearest_neighbors, Neighbor};
pub use sgns::{log_sigmoid, sgns_step, sgns_step_store, sigmoid, RowStore, SgnsScratch};
pub use train::{train_embeddings, train_pass, LrSchedule, TrainPass, TrainReport};

use crate::vocab::Vocabulary;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrDecay {
    /// Linear from `learning_rate` down to `learning_rate / 100`.
    Linear,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingHyperparams {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub window: usize,
    pub subsample_threshold: f64,
    pub negatives: usize,
    pub min_count: u64,
    pub seed: u64,
    pub lr_decay: LrDecay,
}

impl Default for EmbeddingHyperparams {
    fn default() -> Self {
        EmbeddingHyperparams {
            dim: 200,
            epochs: 30,
            learning_rate: 0.01,
            window: 8,
            subsample_threshold: 1e-4,
            negatives: 15,
            min_count: 5,
            seed: 42,
            lr_decay: LrDecay::Linear,
        }
    }
}

impl EmbeddingHyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(String::from(m)));
        if self.dim == 0 {
            return bad("dim must be > 0");
        }
        if self.epochs == 0 {
            return bad("epochs must be > 0");
        }
        if self.window == 0 {
            return bad("window must be >= 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be >= 1");
        }
        if !(self.subsample_threshold > 0.0 && self.subsample_threshold <= 1.0) {
            return bad("subsample threshold must be in (0, 1]");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        Ok(())
    }

    pub fn min_learning_rate(&self) -> f64 {
        match self.lr_decay {
            LrDecay::Linear => self.learning_rate * 1e-2,
            LrDecay::None => self.learning_rate,
        }
    }
}

/// Training state: input vectors (the published embeddings) and output
/// vectors (training-internal), both row-major `|V| x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub vocab: Vocabulary,
    pub dim: usize,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

impl EmbeddingTable {
    pub fn zeros(vocab: Vocabulary, dim: usize) -> Self {
        let n = vocab.len() * dim;
        EmbeddingTable { vocab, dim, input: vec![0.0; n], output: vec![0.0; n] }
    }

    /// word2vec initialization: inputs uniform in `(-0.5/dim, 0.5/dim)`,
    /// outputs zero.
    pub fn initialized(vocab: Vocabulary, dim: usize, seed: u64) -> Self {
        let mut t = Self::zeros(vocab, dim);
        let mut rng = crate::rng::seeded(seed);
        for x in &mut t.input {
            *x = (rng.gen::<f64>() - 0.5) / dim as f64;
        }
        t
    }

    pub fn rows(&self) -> usize {
        self.vocab.len()
    }

    pub fn input_row(&self, i: usize) -> &[f64] {
        &self.input[i * self.dim..(i + 1) * self.dim]
    }

    pub fn output_row(&self, i: usize) -> &[f64] {
        &self.output[i * self.dim..(i + 1) * self.dim]
    }

    pub fn input_row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.input[i * self.dim..(i + 1) * self.dim]
    }

    pub fn output_row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.output[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.input.iter().chain(&self.output).all(|x| x.is_finite())
    }

    pub fn to_embeddings(&self) -> Embeddings {
        let words = self.vocab.entries().iter().map(|e| e.word.clone()).collect();
        Embeddings::new(words, self.dim, self.input.clone()).expect("table shape is consistent")
    }
}

/// Read-only word vectors with cached norms.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
    dim: usize,
    data: Vec<f64>,
    norms: Vec<f64>,
}

impl Embeddings {
    /// Fails when `data` is not `words.len() * dim` long. A repeated word
    /// keeps its first row for lookups.
    pub fn new(words: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != words.len() * dim {
            return Err(Error::DimensionMismatch { expected: words.len() * dim, found: data.len() });
        }
        let mut index = BTreeMap::new();
        for (i, w) in words.iter().enumerate() {
            index.entry(w.clone()).or_insert(i);
        }
        let norms = data.chunks_exact(dim).map(l2_norm).collect();
        Ok(Embeddings { words, index, dim, data, norms })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.row(i))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Same words, every component multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Embeddings {
        let data = self.data.iter().map(|x| x * c).collect();
        Embeddings::new(self.words.clone(), self.dim, data).expect("same shape")
    }
}
