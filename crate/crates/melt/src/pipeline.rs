//! End-to-end run with content-addressed stage caching.
//!
//! Each stage owns a directory under the output root. Its cache key hashes
//! the stage name, the tool version, the stage's own parameters and the
//! keys and artifact hashes of everything upstream. A stage is skipped when
//! `stamp.json` in its directory carries the same key and every listed
//! output still hashes to the recorded value.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use melt_core::mask::BaselineStrategy;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::PipelineConfig;
use crate::emit::EmitStrategy;
use crate::error::{Error, Result};
use crate::hash::{hash_file, hash_json, hash_path, list_files};
use crate::semantic::{EDGES_FILE, NODES_FILE};
use crate::stages::{self, CurriculumArgs, EmitArgs};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const RUN_FILE: &str = "run.json";
pub const TIMINGS_FILE: &str = "timings.json";
pub const STAMP_FILE: &str = "stamp.json";

pub const INGEST: &str = "ingest";
pub const EXTRACT: &str = "extract";
pub const EMBED: &str = "embed";
pub const GRAPH: &str = "graph";
pub const CURRICULUM: &str = "curriculum";
pub const EMIT: &str = "emit";
pub const STAGES: [&str; 6] = [INGEST, EXTRACT, EMBED, GRAPH, CURRICULUM, EMIT];

pub const VOCAB_FILE: &str = "vocab.tsv";
pub const TOKENS_FILE: &str = "tokens.jsonl";
pub const SEEDS_FILE: &str = "seeds.tsv";
pub const EMBED_SUMMARY_FILE: &str = "train.json";
pub const INGEST_SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub key: String,
    /// Upstream artifacts consumed, by name.
    pub inputs: BTreeMap<String, String>,
    /// Files written, relative to the output root.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub config: PipelineConfig,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub name: String,
    pub seconds: f64,
    pub cache_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub stages: Vec<StageTiming>,
    pub total_seconds: f64,
}

impl Timings {
    pub fn cache_hit(&self, stage: &str) -> Option<bool> {
        self.stages.iter().find(|s| s.name == stage).map(|s| s.cache_hit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Stamp {
    key: String,
    outputs: BTreeMap<String, String>,
}

struct Runner {
    root: PathBuf,
    records: Vec<StageRecord>,
    timings: Vec<StageTiming>,
}

impl Runner {
    fn dir(&self, stage: &str) -> PathBuf {
        self.root.join(stage)
    }

    fn record(&self, stage: &str) -> &StageRecord {
        self.records.iter().find(|r| r.name == stage).expect("upstream stage ran")
    }

    /// Hash of one upstream output, keyed `stage/file`.
    fn output_hash(&self, stage: &str, file: &str) -> (String, String) {
        let key = format!("{stage}/{file}");
        let h = self.record(stage).outputs.get(&key).cloned().expect("upstream output recorded");
        (key, h)
    }

    fn cached(&self, dir: &Path, key: &str) -> Option<BTreeMap<String, String>> {
        let stamp: Stamp = crate::read_json(&dir.join(STAMP_FILE)).ok()?;
        if stamp.key != key || stamp.outputs.is_empty() {
            return None;
        }
        for (rel, h) in &stamp.outputs {
            if hash_file(&self.root.join(rel)).ok()? != *h {
                return None;
            }
        }
        Some(stamp.outputs)
    }

    fn stage(
        &mut self,
        name: &'static str,
        params: Value,
        inputs: BTreeMap<String, String>,
        upstream: &[&str],
        run: impl FnOnce(&Path) -> Result<()>,
    ) -> Result<()> {
        let start = Instant::now();
        let upstream_keys: BTreeMap<&str, &str> =
            upstream.iter().map(|u| (*u, self.record(u).key.as_str())).collect();
        let key = hash_json(&json!({
            "stage": name,
            "tool_version": TOOL_VERSION,
            "params": params,
            "inputs": inputs,
            "upstream": upstream_keys,
        }))?;
        let dir = self.dir(name);
        let (outputs, cache_hit) = match self.cached(&dir, &key) {
            Some(outputs) => {
                info!("{name}: cached");
                (outputs, true)
            }
            None => {
                info!("{name}: running");
                if dir.exists() {
                    fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e).in_stage(name))?;
                }
                fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e).in_stage(name))?;
                run(&dir).map_err(|e| e.in_stage(name))?;
                let mut outputs = BTreeMap::new();
                for rel in list_files(&dir)? {
                    let rel = format!("{name}/{rel}");
                    let h = hash_file(&self.root.join(&rel))?;
                    outputs.insert(rel, h);
                }
                crate::write_json(&dir.join(STAMP_FILE), &Stamp { key: key.clone(), outputs: outputs.clone() })?;
                (outputs, false)
            }
        };
        self.records.push(StageRecord { name: name.into(), key, inputs, outputs });
        self.timings.push(StageTiming { name: name.into(), seconds: start.elapsed().as_secs_f64(), cache_hit });
        Ok(())
    }
}

fn map(items: impl IntoIterator<Item = (String, String)>) -> BTreeMap<String, String> {
    items.into_iter().collect()
}

/// Runs every stage in order. `base` is the directory relative paths in
/// `cfg` are resolved against.
pub fn run_pipeline(cfg: &PipelineConfig, base: &Path) -> Result<(RunManifest, Timings)> {
    cfg.validate(base)?;
    let paths = cfg.resolve(base);
    let started = Instant::now();
    let mut r = Runner { root: paths.output.clone(), records: Vec::new(), timings: Vec::new() };
    fs::create_dir_all(&r.root).map_err(|e| Error::io(&r.root, e))?;

    let corpus_hash = hash_path(&paths.corpus)?;
    r.stage(
        INGEST,
        json!({ "min_count": cfg.ingest.min_count }),
        map([("corpus".into(), corpus_hash)]),
        &[],
        |dir| {
            let summary = stages::ingest(&paths.corpus, cfg.ingest.min_count, &dir.join(VOCAB_FILE), &dir.join(TOKENS_FILE))?;
            crate::write_json(&dir.join(INGEST_SUMMARY_FILE), &summary)
        },
    )?;
    let tokens = r.dir(INGEST).join(TOKENS_FILE);
    let vocab = r.dir(INGEST).join(VOCAB_FILE);

    let dict_hash = hash_path(&paths.dictionary)?;
    r.stage(
        EXTRACT,
        json!({}),
        map([r.output_hash(INGEST, TOKENS_FILE), ("dictionary".into(), dict_hash)]),
        &[INGEST],
        |dir| stages::extract(&tokens, &paths.dictionary, &dir.join(SEEDS_FILE)).map(|_| ()),
    )?;
    let seeds = r.dir(EXTRACT).join(SEEDS_FILE);

    let hp = cfg.hyperparams()?;
    let emb_file = if cfg.embedding.binary { "emb.bin" } else { "emb.vec" };
    r.stage(
        EMBED,
        json!({ "embedding": cfg.embedding, "seed": cfg.seed, "workers": cfg.workers }),
        map([r.output_hash(INGEST, TOKENS_FILE), r.output_hash(INGEST, VOCAB_FILE)]),
        &[INGEST],
        |dir| {
            let s = stages::embed(&tokens, &vocab, &dir.join(emb_file), &hp, cfg.workers, cfg.embedding.binary)?;
            crate::write_json(&dir.join(EMBED_SUMMARY_FILE), &s)
        },
    )?;
    let emb = r.dir(EMBED).join(emb_file);

    let concepts_hash = hash_path(&paths.concepts)?;
    let gcfg = cfg.graph_config();
    r.stage(
        GRAPH,
        json!({ "graph": cfg.graph }),
        map([r.output_hash(EMBED, emb_file), r.output_hash(EXTRACT, SEEDS_FILE), ("concepts".into(), concepts_hash)]),
        &[EMBED, EXTRACT],
        |dir| stages::graph(&emb, &seeds, &paths.concepts, &gcfg, dir).map(|_| ()),
    )?;
    let graph_dir = r.dir(GRAPH);

    let args = CurriculumArgs {
        strategy: cfg.strategy()?,
        k: cfg.curriculum.k,
        schedule: cfg.schedule()?,
        warmup_mode: cfg.warmup_mode()?,
        vocab: Some(&vocab),
        seeds: Some(&seeds),
    };
    r.stage(
        CURRICULUM,
        json!({ "curriculum": cfg.curriculum }),
        map([
            r.output_hash(GRAPH, NODES_FILE),
            r.output_hash(GRAPH, EDGES_FILE),
            r.output_hash(INGEST, VOCAB_FILE),
            r.output_hash(EXTRACT, SEEDS_FILE),
        ]),
        &[GRAPH, INGEST, EXTRACT],
        |dir| stages::curriculum(&graph_dir, &args, dir).map(|_| ()),
    )?;
    let plan_file = r.dir(CURRICULUM).join(crate::plan::PLAN_FILE);

    let emit_cfg = cfg.emit_config()?;
    let generic = paths.generic.as_deref().filter(|_| {
        emit_cfg.strategy == EmitStrategy::Baseline(BaselineStrategy::DiffMasking)
    });
    let mut emit_inputs = map([
        r.output_hash(INGEST, TOKENS_FILE),
        r.output_hash(CURRICULUM, crate::plan::PLAN_FILE),
        r.output_hash(EXTRACT, SEEDS_FILE),
    ]);
    if let Some(g) = generic {
        emit_inputs.insert("generic".into(), hash_path(g)?);
    }
    let emit_args = EmitArgs { plan: Some(&plan_file), seeds: Some(&seeds), generic };
    r.stage(
        EMIT,
        json!({ "masking": cfg.masking, "seed": cfg.seed }),
        emit_inputs,
        &[INGEST, CURRICULUM, EXTRACT],
        |dir| stages::emit(&tokens, &emit_args, &emit_cfg, dir).map(|_| ()),
    )?;

    let manifest = RunManifest {
        tool_version: TOOL_VERSION.into(),
        config_hash: hash_json(cfg)?,
        config: cfg.clone(),
        stages: r.records,
    };
    let timings = Timings { stages: r.timings, total_seconds: started.elapsed().as_secs_f64() };
    crate::write_json(&r.root.join(RUN_FILE), &manifest)?;
    crate::write_json(&r.root.join(TIMINGS_FILE), &timings)?;
    Ok((manifest, timings))
}

pub fn read_run(dir: &Path) -> Result<RunManifest> {
    crate::read_json(&dir.join(RUN_FILE))
}

