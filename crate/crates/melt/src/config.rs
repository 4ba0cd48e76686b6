//! Pipeline configuration file (TOML).
//!
//! ```toml
//! seed = 42
//! workers = 1
//!
//! [paths]
//! corpus = "corpus"
//! dictionary = "materials_dict.txt"
//! concepts = "concepts_six.tsv"
//! generic = "generic_freq.tsv"   # only for diff-masking
//! output = "out"
//!
//! [embedding]
//! dim = 200
//! epochs = 30
//! ```
//!
//! Every section and field other than `[paths]` has a default. Relative
//! paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use melt_core::curriculum::{
    build_schedule, Schedule, Strategy, WarmupMode, DEFAULT_STAGES, DEFAULT_STAGE_STEPS, DEFAULT_TOTAL_STEPS,
    DEFAULT_WARMUP_STEPS,
};
use melt_core::embed::{EmbeddingHyperparams, LrDecay};
use melt_core::graph::GraphConfig;
use melt_core::mask::{MaskingConfig, DEFAULT_SEQUENCE_LENGTH, DEFAULT_TARGET_RATIO, MASK_SENTINEL};
use melt_core::vocab::DEFAULT_MIN_COUNT;
use serde::{Deserialize, Serialize};

use crate::emit::{EmitConfig, EmitStrategy, DEFAULT_SHARD_SIZE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub paths: Paths,
    #[serde(default)]
    pub ingest: IngestSection,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub graph: GraphSection,
    #[serde(default)]
    pub curriculum: CurriculumSection,
    #[serde(default)]
    pub masking: MaskingSection,
}

fn default_seed() -> u64 {
    42
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub dictionary: PathBuf,
    pub concepts: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generic: Option<PathBuf>,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub min_count: u64,
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection { min_count: DEFAULT_MIN_COUNT }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub dim: usize,
    pub epochs: usize,
    pub lr: f64,
    pub window: usize,
    pub negatives: usize,
    pub subsample: f64,
    pub lr_decay: String,
    pub binary: bool,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        let hp = EmbeddingHyperparams::default();
        EmbeddingSection {
            dim: hp.dim,
            epochs: hp.epochs,
            lr: hp.learning_rate,
            window: hp.window,
            negatives: hp.negatives,
            subsample: hp.subsample_threshold,
            lr_decay: "linear".into(),
            binary: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    pub topk: usize,
    pub min_sim: f64,
    pub filter_candidates: bool,
}

impl Default for GraphSection {
    fn default() -> Self {
        let g = GraphConfig::default();
        GraphSection { topk: g.topk, min_sim: g.min_sim, filter_candidates: g.filter_candidates }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumSection {
    pub strategy: String,
    pub k: usize,
    pub warmup: u64,
    pub stage: u64,
    pub total: u64,
    pub warmup_mode: String,
}

impl Default for CurriculumSection {
    fn default() -> Self {
        CurriculumSection {
            strategy: Strategy::NodeDegree.as_str().into(),
            k: DEFAULT_STAGES,
            warmup: DEFAULT_WARMUP_STEPS,
            stage: DEFAULT_STAGE_STEPS,
            total: DEFAULT_TOTAL_STEPS,
            warmup_mode: "random".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskingSection {
    pub strategy: String,
    pub ratio: f64,
    pub seqlen: usize,
    pub sentinel: String,
    pub fallback_random_fill: bool,
    pub bert_corruption: bool,
    pub shard_size: usize,
}

impl Default for MaskingSection {
    fn default() -> Self {
        MaskingSection {
            strategy: "melt".into(),
            ratio: DEFAULT_TARGET_RATIO,
            seqlen: DEFAULT_SEQUENCE_LENGTH,
            sentinel: MASK_SENTINEL.into(),
            fallback_random_fill: true,
            bert_corruption: false,
            shard_size: DEFAULT_SHARD_SIZE,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub min_count: Option<u64>,
    pub dim: Option<usize>,
    pub epochs: Option<usize>,
    pub topk: Option<usize>,
    pub min_sim: Option<f64>,
    pub curriculum: Option<String>,
    pub k: Option<usize>,
    pub masking: Option<String>,
    pub ratio: Option<f64>,
}

fn invalid(e: impl std::fmt::Display) -> Error {
    Error::Validation(e.to_string())
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Input(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Input(format!("config: {e}")))
    }

    /// Reads a config file; returns it with the directory relative paths
    /// resolve against.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let cfg = Self::parse(&crate::formats::read_to_string(path)?)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($src:expr => $dst:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        set!(o.seed => self.seed);
        set!(o.workers => self.workers);
        set!(o.output => self.paths.output);
        set!(o.min_count => self.ingest.min_count);
        set!(o.dim => self.embedding.dim);
        set!(o.epochs => self.embedding.epochs);
        set!(o.topk => self.graph.topk);
        set!(o.min_sim => self.graph.min_sim);
        set!(o.curriculum => self.curriculum.strategy);
        set!(o.k => self.curriculum.k);
        set!(o.masking => self.masking.strategy);
        set!(o.ratio => self.masking.ratio);
    }

    /// Input paths resolved against `base`.
    pub fn resolve(&self, base: &Path) -> Paths {
        let r = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        Paths {
            corpus: r(&self.paths.corpus),
            dictionary: r(&self.paths.dictionary),
            concepts: r(&self.paths.concepts),
            generic: self.paths.generic.as_deref().map(r),
            output: r(&self.paths.output),
        }
    }

    /// Checks input paths (input error) and every numeric precondition
    /// (validation error).
    pub fn validate(&self, base: &Path) -> Result<()> {
        let p = self.resolve(base);
        let mut required = vec![("corpus", &p.corpus), ("dictionary", &p.dictionary), ("concepts", &p.concepts)];
        if let Some(g) = &p.generic {
            required.push(("generic", g));
        }
        for (name, path) in required {
            if !path.exists() {
                return Err(Error::Input(format!("{name} path {} does not exist", path.display())));
            }
        }
        if self.workers == 0 {
            return Err(invalid("workers must be >= 1"));
        }
        self.hyperparams()?.validate().map_err(invalid)?;
        let g = self.graph_config();
        if g.topk == 0 || g.min_sim.is_nan() || g.min_sim > 1.0 {
            return Err(invalid("graph: topk must be >= 1 and min_sim <= 1"));
        }
        self.strategy()?;
        self.warmup_mode()?;
        self.schedule()?;
        if self.curriculum.k == 0 {
            return Err(invalid("curriculum: k must be >= 1"));
        }
        let emit = self.emit_config()?;
        emit.masking.validate().map_err(invalid)?;
        if emit.shard_size == 0 {
            return Err(invalid("masking: shard_size must be >= 1"));
        }
        if emit.strategy == EmitStrategy::Baseline(melt_core::mask::BaselineStrategy::DiffMasking)
            && self.paths.generic.is_none()
        {
            return Err(Error::Input("diff-masking needs paths.generic".into()));
        }
        Ok(())
    }

    pub fn hyperparams(&self) -> Result<EmbeddingHyperparams> {
        let e = &self.embedding;
        let lr_decay = match e.lr_decay.as_str() {
            "linear" => LrDecay::Linear,
            "none" => LrDecay::None,
            other => return Err(invalid(format!("unknown lr_decay {other:?}"))),
        };
        Ok(EmbeddingHyperparams {
            dim: e.dim,
            epochs: e.epochs,
            learning_rate: e.lr,
            window: e.window,
            subsample_threshold: e.subsample,
            negatives: e.negatives,
            min_count: self.ingest.min_count,
            seed: self.seed,
            lr_decay,
        })
    }

    pub fn graph_config(&self) -> GraphConfig {
        GraphConfig {
            topk: self.graph.topk,
            min_sim: self.graph.min_sim,
            filter_candidates: self.graph.filter_candidates,
        }
    }

    pub fn strategy(&self) -> Result<Strategy> {
        self.curriculum.strategy.parse().map_err(invalid)
    }

    pub fn warmup_mode(&self) -> Result<WarmupMode> {
        self.curriculum.warmup_mode.parse().map_err(invalid)
    }

    pub fn schedule(&self) -> Result<Schedule> {
        let c = &self.curriculum;
        build_schedule(c.k.max(1), c.warmup, c.stage, c.total).map_err(invalid)
    }

    pub fn emit_config(&self) -> Result<EmitConfig> {
        let m = &self.masking;
        Ok(EmitConfig {
            masking: MaskingConfig {
                target_token_ratio: m.ratio,
                sequence_length: m.seqlen,
                mask_sentinel: m.sentinel.clone(),
                seed: self.seed,
                fallback_random_fill: m.fallback_random_fill,
                bert_corruption: m.bert_corruption,
            },
            strategy: m.strategy.parse().map_err(invalid)?,
            shard_size: m.shard_size,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[paths]
corpus = "corpus"
dictionary = "dict.txt"
concepts = "pairs.tsv"
output = "out"
"#;

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = PipelineConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.embedding.dim, 200);
        assert_eq!(cfg.embedding.negatives, 15);
        assert_eq!(cfg.graph.topk, 5);
        assert_eq!(cfg.curriculum.k, 3);
        assert_eq!(cfg.masking.ratio, 0.15);
        assert_eq!(cfg.hyperparams().unwrap(), EmbeddingHyperparams::default());
    }

    #[test]
    fn round_trip() {
        let mut cfg = PipelineConfig::parse(MINIMAL).unwrap();
        cfg.paths.generic = Some("generic.tsv".into());
        cfg.embedding.subsample = 1e-4;
        cfg.graph.min_sim = -1.0;
        let again = PipelineConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = format!("{MINIMAL}\n[graph]\ntop_k = 3\n");
        assert!(matches!(PipelineConfig::parse(&text), Err(Error::Input(_))));
    }

    #[test]
    fn overrides_win() {
        let mut cfg = PipelineConfig::parse(MINIMAL).unwrap();
        cfg.apply(&Overrides { topk: Some(9), seed: Some(1), ..Default::default() });
        assert_eq!((cfg.graph.topk, cfg.seed), (9, 1));
    }

    #[test]
    fn bad_numbers_are_validation_errors() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["corpus", "dict.txt", "pairs.tsv"] {
            std::fs::write(dir.path().join(f), "x").unwrap();
        }
        let mut cfg = PipelineConfig::parse(MINIMAL).unwrap();
        cfg.validate(dir.path()).unwrap();
        cfg.masking.ratio = 1.5;
        assert_eq!(cfg.validate(dir.path()).unwrap_err().exit_code(), 3);
        let cfg = PipelineConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.validate(Path::new("/nonexistent")).unwrap_err().exit_code(), 1);
    }
}
