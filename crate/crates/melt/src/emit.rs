//! Staged dataset emission.
//!
//! Every dataset masks the whole packed corpus once: curriculum runs emit
//! one dataset per stage (plus warm-up), baselines emit a single one. The
//! manifest lists the schedule windows in replay order and names the
//! dataset each window draws from. Shards use RNG streams derived from the
//! seed and the shard index, so the output does not depend on the thread
//! count.

use std::collections::BTreeMap;
use std::path::Path;

use log::info;
use melt_core::chem::SeedEntitySet;
use melt_core::curriculum::{CurriculumPlan, Phase, Strategy, WarmupMode, DEFAULT_TOTAL_STEPS};
use melt_core::mask::{
    calibrate_mask_probability, mask_sequence_with_ratio, pack_document, select_anchors, BaselineStrategy,
    EntityIndex, EntityMatcher, MaskedExample, MaskingConfig, Sequence, DIFF_MASKING_ANCHORS,
};
use melt_core::rng::{derive, seeded};
use melt_core::text::TokenizedDocument;
use melt_core::vocab::canonical_word;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEFAULT_SHARD_SIZE: usize = 1000;
const STREAM_DATASET: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitStrategy {
    /// Follow the curriculum plan.
    Melt,
    Baseline(BaselineStrategy),
}

impl EmitStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            EmitStrategy::Melt => "melt",
            EmitStrategy::Baseline(b) => b.as_str(),
        }
    }
}

impl std::str::FromStr for EmitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "melt" | "curriculum" => Ok(EmitStrategy::Melt),
            other => Ok(EmitStrategy::Baseline(other.parse()?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmitConfig {
    pub masking: MaskingConfig,
    pub strategy: EmitStrategy,
    pub shard_size: usize,
}

impl Default for EmitConfig {
    fn default() -> Self {
        EmitConfig { masking: MaskingConfig::default(), strategy: EmitStrategy::Melt, shard_size: DEFAULT_SHARD_SIZE }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EmitInputs<'a> {
    pub plan: Option<&'a CurriculumPlan>,
    pub seeds: Option<&'a SeedEntitySet>,
    /// Generic-domain word frequencies (Diff-Masking only).
    pub generic: Option<&'a BTreeMap<String, u64>>,
}

/// One dataset to emit.
#[derive(Debug, Clone)]
struct DatasetSpec {
    name: String,
    /// Stage recorded on each example.
    stage: usize,
    /// Stage passed to the masker: 0 is uniform random masking.
    mask_stage: usize,
    ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub stage: usize,
    pub target_ratio: f64,
    pub p_m: f64,
    pub shortfall: f64,
    pub fallback_only: bool,
    pub eligible_entities: usize,
    pub eligible_tokens: u64,
    pub examples: u64,
    pub tokens: u64,
    pub masked: u64,
    pub realized_ratio: f64,
    pub files: Vec<String>,
    pub shard_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseManifest {
    pub start: u64,
    pub end: u64,
    pub phase: String,
    pub dataset: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskingManifest {
    pub target_token_ratio: f64,
    pub sequence_length: usize,
    pub mask_sentinel: String,
    pub seed: u64,
    pub fallback_random_fill: bool,
    pub bert_corruption: bool,
    pub shard_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub strategy: String,
    pub curriculum: Option<String>,
    pub config_hash: String,
    pub config: MaskingManifest,
    pub inputs: BTreeMap<String, String>,
    pub sequences: u64,
    pub sequence_tokens: u64,
    /// Sequences too short to mask.
    pub skipped_sequences: u64,
    pub anchors: Option<Vec<String>>,
    pub datasets: Vec<DatasetManifest>,
    /// Replay order for a trainer.
    pub phases: Vec<PhaseManifest>,
}

pub fn dataset_file(name: &str, shard: usize) -> String {
    format!("{name}_shard{shard}.jsonl")
}

/// Packs every document into sequences, in document order.
pub fn pack_corpus(docs: &[TokenizedDocument], seq_len: usize) -> Vec<Sequence> {
    docs.iter()
        .flat_map(|d| {
            let sentences: Vec<Vec<&str>> =
                d.sentences.iter().map(|s| s.iter().map(|t| t.surface.as_str()).collect()).collect();
            pack_document(&d.doc_id, &sentences, seq_len)
        })
        .collect()
}

struct Prepared {
    matcher: Option<EntityMatcher>,
    specs: Vec<DatasetSpec>,
    phases: Vec<PhaseManifest>,
    anchors: Option<Vec<String>>,
    curriculum: Option<String>,
}

fn stage_name(stage: usize) -> String {
    format!("stage{stage}")
}

fn prepare(seqs: &[Sequence], cfg: &EmitConfig, inputs: &EmitInputs<'_>) -> Result<Prepared> {
    let ratio = cfg.masking.target_token_ratio;
    let single = |name: String, mask_stage: usize, ratio: f64| {
        vec![DatasetSpec { name, stage: 1, mask_stage, ratio }]
    };
    let total = inputs.plan.map_or(DEFAULT_TOTAL_STEPS, |p| p.schedule.total_steps);
    let whole_run = vec![PhaseManifest { start: 0, end: total, phase: "s1".into(), dataset: stage_name(1) }];
    let prepared = match cfg.strategy {
        EmitStrategy::Melt => {
            let plan = inputs.plan.ok_or(melt_core::Error::MissingInput("curriculum plan"))?;
            let matcher = EntityMatcher::new(&plan.stage_map());
            let mut specs = Vec::new();
            let mut phases = Vec::new();
            let windows = plan.schedule.windows();
            let warmup_stage = match plan.warmup_mode {
                WarmupMode::Random => 0,
                WarmupMode::G1 => 1,
            };
            let ramp = plan.ratio_ramp.filter(|_| plan.strategy == Strategy::MaskingRatio);
            let mut ramp_index = 0usize;
            for w in &windows {
                let mid = w.start + (w.end - w.start) / 2;
                let name = match (w.phase, ramp) {
                    (Phase::Warmup, _) => {
                        let r = ramp.map_or(ratio, |r| r.ratio_at(mid));
                        specs.push(DatasetSpec { name: stage_name(0), stage: 0, mask_stage: warmup_stage, ratio: r });
                        stage_name(0)
                    }
                    (Phase::Stage(i), Some(r)) => {
                        ramp_index += 1;
                        let name = format!("ratio{ramp_index}");
                        specs.push(DatasetSpec { name: name.clone(), stage: i, mask_stage: i, ratio: r.ratio_at(mid) });
                        name
                    }
                    (Phase::Stage(i), None) => {
                        if !specs.iter().any(|s| s.stage == i && s.mask_stage == i) {
                            specs.push(DatasetSpec { name: stage_name(i), stage: i, mask_stage: i, ratio });
                        }
                        stage_name(i)
                    }
                };
                phases.push(PhaseManifest { start: w.start, end: w.end, phase: w.phase.to_string(), dataset: name });
            }
            specs.sort_by_key(|s| s.stage);
            Prepared {
                matcher: Some(matcher),
                specs,
                phases,
                anchors: None,
                curriculum: Some(plan.strategy.as_str().into()),
            }
        }
        EmitStrategy::Baseline(BaselineStrategy::RandomDsp) => Prepared {
            matcher: None,
            specs: single(stage_name(1), 0, ratio),
            phases: whole_run,
            anchors: None,
            curriculum: None,
        },
        EmitStrategy::Baseline(BaselineStrategy::EntityOnly) => {
            let seeds = inputs.seeds.ok_or(melt_core::Error::MissingInput("seed entities"))?;
            Prepared {
                matcher: Some(EntityMatcher::single_stage(seeds.iter().map(|(s, _)| s))),
                specs: single(stage_name(1), 1, ratio),
                phases: whole_run,
                anchors: None,
                curriculum: None,
            }
        }
        EmitStrategy::Baseline(b @ BaselineStrategy::DiffMasking) => {
            let generic = inputs.generic.ok_or(melt_core::Error::MissingInput("generic frequency table"))?;
            let mut target: BTreeMap<String, u64> = BTreeMap::new();
            for t in seqs.iter().flat_map(|s| &s.tokens) {
                *target.entry(canonical_word(t).into_owned()).or_insert(0) += 1;
            }
            let anchors = select_anchors(&target, generic, DIFF_MASKING_ANCHORS);
            if anchors.len() != DIFF_MASKING_ANCHORS {
                return Err(Error::Validation(format!(
                    "corpus yields {} anchor candidates, need {DIFF_MASKING_ANCHORS}",
                    anchors.len()
                )));
            }
            Prepared {
                matcher: Some(EntityMatcher::single_stage(anchors.iter().map(String::as_str))),
                specs: single(stage_name(1), 1, b.target_ratio(ratio)),
                phases: whole_run,
                anchors: Some(anchors),
                curriculum: None,
            }
        }
    };
    Ok(prepared)
}

/// Runs the emission, handing each finished shard to `sink` in dataset
/// then shard order. Only one dataset is held in memory at a time.
pub fn emit_with(
    docs: &[TokenizedDocument],
    cfg: &EmitConfig,
    inputs: &EmitInputs<'_>,
    sink: &mut dyn FnMut(&str, &[MaskedExample]) -> Result<()>,
) -> Result<Manifest> {
    cfg.masking.validate()?;
    if cfg.shard_size == 0 {
        return Err(Error::Validation("shard size must be >= 1".into()));
    }
    let seqs = pack_corpus(docs, cfg.masking.sequence_length);
    if seqs.is_empty() {
        return Err(melt_core::Error::EmptyCorpus.into());
    }
    let prep = prepare(&seqs, cfg, inputs)?;
    let indices: Vec<EntityIndex> = match &prep.matcher {
        Some(m) => seqs.par_iter().map(|s| m.index(&s.tokens)).collect(),
        None => vec![EntityIndex::default(); seqs.len()],
    };
    let total_tokens: u64 = seqs.iter().map(|s| s.tokens.len() as u64).sum();
    let mut datasets = Vec::new();
    let mut skipped = 0u64;
    for (d, spec) in prep.specs.iter().enumerate() {
        let eligible_tokens: u64 = if spec.mask_stage == 0 {
            0
        } else {
            indices.iter().map(|i| i.eligible_tokens(spec.mask_stage) as u64).sum()
        };
        let cal = calibrate_mask_probability(eligible_tokens, total_tokens, spec.ratio)?;
        let shard_seeds: Vec<u64> = (0..seqs.len().div_ceil(cfg.shard_size))
            .map(|j| derive(cfg.masking.seed, STREAM_DATASET + d as u64, j as u64))
            .collect();
        let shards: Vec<(Vec<MaskedExample>, u64)> = seqs
            .par_chunks(cfg.shard_size)
            .zip(indices.par_chunks(cfg.shard_size))
            .zip(shard_seeds.par_iter())
            .map(|((part, idx), &seed)| {
                let mut rng = seeded(seed);
                let mut out = Vec::with_capacity(part.len());
                let mut short = 0u64;
                for (seq, index) in part.iter().zip(idx) {
                    let masked = mask_sequence_with_ratio(
                        &seq.tokens,
                        index,
                        spec.mask_stage,
                        cal.p_m,
                        spec.ratio,
                        &cfg.masking,
                        &mut rng,
                    );
                    match masked {
                        Some(mut ex) => {
                            ex.sequence_id = seq.id.clone();
                            ex.stage = spec.stage;
                            ex.strategy = cfg.strategy.as_str().into();
                            out.push(ex);
                        }
                        None => short += 1,
                    }
                }
                (out, short)
            })
            .collect();
        let mut m = DatasetManifest {
            name: spec.name.clone(),
            stage: spec.stage,
            target_ratio: spec.ratio,
            p_m: cal.p_m,
            shortfall: cal.shortfall,
            fallback_only: cal.fallback_only,
            eligible_entities: if spec.mask_stage == 0 {
                0
            } else {
                prep.matcher.as_ref().map_or(0, |mt| mt.eligible_entities(spec.mask_stage).len())
            },
            eligible_tokens,
            examples: 0,
            tokens: 0,
            masked: 0,
            realized_ratio: 0.0,
            files: Vec::new(),
            shard_seeds,
        };
        for (j, (examples, short)) in shards.iter().enumerate() {
            if d == 0 {
                skipped += short;
            }
            m.examples += examples.len() as u64;
            m.tokens += examples.iter().map(|e| e.tokens.len() as u64).sum::<u64>();
            m.masked += examples.iter().map(|e| e.masked_positions.len() as u64).sum::<u64>();
            let file = dataset_file(&spec.name, j);
            sink(&file, examples)?;
            m.files.push(file);
        }
        m.realized_ratio = if m.tokens == 0 { 0.0 } else { m.masked as f64 / m.tokens as f64 };
        info!("{}: p_m={:.4} realized ratio={:.4}", m.name, m.p_m, m.realized_ratio);
        datasets.push(m);
    }
    let config = MaskingManifest {
        target_token_ratio: cfg.masking.target_token_ratio,
        sequence_length: cfg.masking.sequence_length,
        mask_sentinel: cfg.masking.mask_sentinel.clone(),
        seed: cfg.masking.seed,
        fallback_random_fill: cfg.masking.fallback_random_fill,
        bert_corruption: cfg.masking.bert_corruption,
        shard_size: cfg.shard_size,
    };
    Ok(Manifest {
        strategy: cfg.strategy.as_str().into(),
        curriculum: prep.curriculum,
        config_hash: String::new(),
        config,
        inputs: BTreeMap::new(),
        sequences: seqs.len() as u64,
        sequence_tokens: total_tokens,
        skipped_sequences: skipped,
        anchors: prep.anchors,
        datasets,
        phases: prep.phases,
    })
}

/// In-memory emission: every shard's examples keyed by file name.
pub fn emit(
    docs: &[TokenizedDocument],
    cfg: &EmitConfig,
    inputs: &EmitInputs<'_>,
) -> Result<(Manifest, BTreeMap<String, Vec<MaskedExample>>)> {
    let mut files = BTreeMap::new();
    let manifest = emit_with(docs, cfg, inputs, &mut |name, ex| {
        files.insert(name.to_string(), ex.to_vec());
        Ok(())
    })?;
    Ok((manifest, files))
}

/// Writes shards and `manifest.json` into `dir`. `input_hashes` are
/// recorded in the manifest and folded into its config hash.
pub fn emit_to_dir(
    dir: &Path,
    docs: &[TokenizedDocument],
    cfg: &EmitConfig,
    inputs: &EmitInputs<'_>,
    input_hashes: BTreeMap<String, String>,
) -> Result<Manifest> {
    let mut manifest = emit_with(docs, cfg, inputs, &mut |name, ex| crate::formats::write_examples(&dir.join(name), ex))?;
    manifest.inputs = input_hashes;
    manifest.config_hash = crate::hash::hash_json(&(&manifest.strategy, &manifest.config, &manifest.inputs))?;
    crate::write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    crate::read_json(&dir.join(MANIFEST_FILE))
}

/// Masked examples of one dataset, shards concatenated in order.
pub fn read_dataset(dir: &Path, dataset: &DatasetManifest) -> Result<Vec<MaskedExample>> {
    let mut out = Vec::new();
    for f in &dataset.files {
        out.extend(crate::formats::read_examples(&dir.join(f))?);
    }
    Ok(out)
}

/// Overlap of one emitted dataset with a CoNLL-tagged copy of the same
/// token stream. `stage` selects the dataset; default is the last stage.
pub fn overlap_from_dir(dir: &Path, tagged: &[(String, String)], stage: Option<usize>) -> Result<(String, f64)> {
    let manifest = read_manifest(dir)?;
    let ds = match stage {
        Some(s) => manifest.datasets.iter().find(|d| d.stage == s),
        None => manifest.datasets.iter().max_by_key(|d| d.stage),
    }
    .ok_or_else(|| Error::Input(format!("no dataset for stage {stage:?} in {}", dir.display())))?;
    let examples = read_dataset(dir, ds)?;
    Ok((ds.name.clone(), melt_core::mask::overlap_ratio(&examples, tagged)?))
}
