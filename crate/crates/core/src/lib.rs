//! Allocation-only building blocks for turning a scientific corpus into
//! entity-masked, curriculum-staged pretraining data.
//!
//! The crate is `no_std` (it needs `alloc`). Reading files, threads and
//! serialization live in the `melt` companion crate; everything here is a
//! pure function of its inputs plus an explicit seed.
//!
//! Pipeline order:
//!
//! 1. [`text`]: normalization, sentence splitting, chemistry-aware tokens.
//! 2. [`vocab`]: frequency-filtered vocabulary with a formula exemption.
//! 3. [`formula`] and [`chem`]: stoichiometric formula grammar and the
//!    dictionary tagger producing seed entities.
//! 4. [`embed`]: skip-gram with negative sampling and cosine search.
//! 5. [`graph`]: concept vectors, top-k expansion and node degrees.
//! 6. [`curriculum`]: degree strata, cumulative sets and the step schedule.
//! 7. [`mask`]: entity indexing, budget calibration, masked examples,
//!    baselines and the tag-overlap statistic.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod chem;
pub mod curriculum;
pub mod embed;
mod error;
pub mod formula;
pub mod graph;
pub mod mask;
pub mod matcher;
pub mod rng;
pub mod text;
pub mod vocab;

pub use error::{Error, Result};
