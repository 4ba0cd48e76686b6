//! File-to-file stage runners shared by the subcommands and the pipeline.

use std::collections::BTreeMap;
use std::path::Path;

use log::info;
use melt_core::curriculum::{Schedule, Strategy, WarmupMode};
use melt_core::embed::{EmbeddingHyperparams, TrainReport};
use melt_core::graph::GraphConfig;
use serde::{Deserialize, Serialize};

use crate::corpus;
use crate::emit::{self, EmitConfig, EmitInputs, EmitStrategy, Manifest};
use crate::error::Result;
use crate::formats;
use crate::hash::hash_path;
use crate::plan::{self, PlanFile};
use crate::semantic::{self, GraphMeta};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub documents: usize,
    pub dropped: Vec<String>,
    pub skipped: Vec<String>,
    pub vocab_size: usize,
    pub total_tokens: u64,
}

pub fn ingest(input: &Path, min_count: u64, vocab_out: &Path, tokens_out: &Path) -> Result<IngestSummary> {
    let raw = corpus::read_corpus(input)?;
    let ing = corpus::ingest(&raw.docs, min_count)?;
    formats::write_vocab(vocab_out, ing.vocab.entries())?;
    formats::write_tokens(tokens_out, &ing.docs)?;
    let summary = IngestSummary {
        documents: ing.docs.len(),
        dropped: ing.dropped,
        skipped: raw.skipped,
        vocab_size: ing.vocab.len(),
        total_tokens: ing.vocab.total_tokens(),
    };
    info!("ingested {} documents, {} tokens, vocabulary {}", summary.documents, summary.total_tokens, summary.vocab_size);
    Ok(summary)
}

pub fn extract(tokens: &Path, dict: &Path, out: &Path) -> Result<usize> {
    let docs = formats::read_tokens(tokens)?;
    let dict = corpus::read_dictionary(dict)?;
    let seeds = corpus::extract(&docs, &dict)?;
    formats::write_seeds(out, &seeds)?;
    info!("{} seed entities", seeds.len());
    Ok(seeds.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedSummary {
    pub vocab_size: usize,
    pub dim: usize,
    pub workers: usize,
    pub epoch_mean_loss: Vec<f64>,
    pub epoch_pairs: Vec<u64>,
}

pub fn embed(
    tokens: &Path,
    vocab: &Path,
    out: &Path,
    hp: &EmbeddingHyperparams,
    workers: usize,
    binary: bool,
) -> Result<EmbedSummary> {
    let docs = formats::read_tokens(tokens)?;
    let entries = formats::read_vocab(vocab)?;
    let (emb, report): (_, TrainReport) = crate::embed::train(&docs, entries, hp, workers)?;
    if binary {
        formats::write_embeddings_binary(out, &emb)?;
    } else {
        formats::write_embeddings_text(out, &emb)?;
    }
    for (e, l) in report.epoch_mean_loss.iter().enumerate() {
        info!("epoch {}: mean loss {l:.5}", e + 1);
    }
    Ok(EmbedSummary {
        vocab_size: emb.len(),
        dim: emb.dim(),
        workers: workers.max(1),
        epoch_mean_loss: report.epoch_mean_loss,
        epoch_pairs: report.epoch_pairs,
    })
}

pub fn graph(emb: &Path, seeds: &Path, concepts: &Path, cfg: &GraphConfig, out_dir: &Path) -> Result<GraphMeta> {
    let emb = formats::read_embeddings(emb)?;
    let seeds = formats::read_seeds(seeds)?;
    let specs = formats::read_concepts(concepts)?;
    let artifacts = semantic::build(&emb, &seeds, &specs, cfg)?;
    let meta = semantic::write_dir(out_dir, &artifacts, cfg)?;
    info!("graph: {} nodes, {} edges", meta.nodes, meta.edges);
    Ok(meta)
}

pub struct CurriculumArgs<'a> {
    pub strategy: Strategy,
    pub k: usize,
    pub schedule: Schedule,
    pub warmup_mode: WarmupMode,
    pub vocab: Option<&'a Path>,
    pub seeds: Option<&'a Path>,
}

pub fn curriculum(graph_dir: &Path, args: &CurriculumArgs<'_>, out_dir: &Path) -> Result<PlanFile> {
    let degrees = semantic::read_degrees(graph_dir)?;
    let vocab = args.vocab.map(formats::read_vocab).transpose()?;
    let seeds = args.seeds.map(formats::read_seeds).transpose()?;
    let freqs = (vocab.is_some() || seeds.is_some())
        .then(|| plan::node_frequencies(degrees.keys().cloned(), vocab.as_deref(), seeds.as_ref()));
    let p = plan::build_plan(args.strategy, &degrees, freqs.as_ref(), args.k, args.schedule, args.warmup_mode)?;
    plan::write_plan(out_dir, &p, Some(&degrees))
}

pub struct EmitArgs<'a> {
    pub plan: Option<&'a Path>,
    pub seeds: Option<&'a Path>,
    pub generic: Option<&'a Path>,
}

pub fn emit(tokens: &Path, args: &EmitArgs<'_>, cfg: &EmitConfig, out_dir: &Path) -> Result<Manifest> {
    let docs = formats::read_tokens(tokens)?;
    let mut hashes = BTreeMap::new();
    hashes.insert("tokens".to_string(), hash_path(tokens)?);
    let plan = match args.plan {
        Some(p) if cfg.strategy == EmitStrategy::Melt || p.exists() => {
            let file = plan::read_plan_file(p)?;
            hashes.insert("plan".into(), crate::hash::hash_json(&file)?);
            Some(file.to_plan()?)
        }
        _ => None,
    };
    let seeds = match args.seeds {
        Some(p) => {
            hashes.insert("seeds".into(), hash_path(p)?);
            Some(formats::read_seeds(p)?)
        }
        None => None,
    };
    let generic = match args.generic {
        Some(p) => {
            hashes.insert("generic".into(), hash_path(p)?);
            Some(formats::read_counts(p)?)
        }
        None => None,
    };
    let inputs = EmitInputs { plan: plan.as_ref(), seeds: seeds.as_ref(), generic: generic.as_ref() };
    emit::emit_to_dir(out_dir, &docs, cfg, &inputs, hashes)
}
