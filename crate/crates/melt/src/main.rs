use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use melt::config::{Overrides, PipelineConfig};
use melt::emit::{EmitConfig, EmitStrategy, DEFAULT_SHARD_SIZE};
use melt::error::{Error, Result};
use melt::stages::{self, CurriculumArgs, EmitArgs};
use melt_core::curriculum::{build_schedule, Strategy, WarmupMode};
use melt_core::embed::{EmbeddingHyperparams, LrDecay};
use melt_core::graph::GraphConfig;
use melt_core::mask::MaskingConfig;

#[derive(Parser)]
#[command(name = "melt", version, about = "Entity-masking curriculum datasets from a raw scientific corpus")]
struct Cli {
    /// Log level filter (error, warn, info, debug).
    #[arg(long, global = true, default_value = "info")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize, tokenize and count a corpus.
    Ingest {
        /// Directory of .txt files or a JSONL file of {"doc_id", "text"}.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 5)]
        min_count: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        tokens: PathBuf,
    },
    /// Tag formulas and dictionary terms; write the seed entity table.
    Extract {
        #[arg(long)]
        tokens: PathBuf,
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train skip-gram embeddings.
    Embed(EmbedCmd),
    /// Expand seeds along concept vectors into a semantic graph.
    Graph {
        #[arg(long)]
        emb: PathBuf,
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        concepts: PathBuf,
        #[arg(long, default_value_t = 5)]
        topk: usize,
        /// Similarity floor; -1 disables it.
        #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
        min_sim: f64,
        /// Keep stopwords and non-alphabetic tokens as expansion candidates.
        #[arg(long)]
        no_filter: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stratify the graph into a staged curriculum plan.
    Curriculum {
        #[arg(long)]
        graph: PathBuf,
        /// node-degree, frequency, concept, masking-ratio, reverse or none.
        #[arg(long, default_value = "node-degree")]
        strategy: String,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        warmup: u64,
        #[arg(long, default_value_t = 10_000)]
        stage: u64,
        #[arg(long, default_value_t = 100_000)]
        total: u64,
        /// random or g1.
        #[arg(long, default_value = "random")]
        warmup_mode: String,
        /// Vocabulary, for frequency-based strategies.
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Seed table, for frequencies of multi-word terms.
        #[arg(long)]
        seeds: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit masked training datasets.
    Emit(EmitCmd),
    /// Dataset analyses.
    #[command(subcommand)]
    Analyze(Analyze),
    /// Run every stage from a config file, reusing cached stages.
    Run(RunCmd),
    /// Summarize a finished run.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

#[derive(Args)]
struct EmbedCmd {
    #[arg(long)]
    tokens: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    dim: usize,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 8)]
    window: usize,
    #[arg(long, default_value_t = 15)]
    negatives: usize,
    #[arg(long, default_value_t = 1e-4)]
    subsample: f64,
    /// linear or none.
    #[arg(long, default_value = "linear")]
    lr_decay: String,
    /// Write the binary word2vec layout.
    #[arg(long)]
    binary: bool,
}

#[derive(Args)]
struct EmitCmd {
    #[arg(long)]
    tokens: PathBuf,
    /// Plan directory or plan.json; required for --strategy melt.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.15)]
    ratio: f64,
    #[arg(long, default_value_t = 128)]
    seqlen: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// melt, random, entity-only or diff-masking.
    #[arg(long, default_value = "melt")]
    strategy: String,
    /// Seed table, for entity-only.
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Generic-domain `word<TAB>count` table, for diff-masking.
    #[arg(long)]
    generic: Option<PathBuf>,
    #[arg(long)]
    bert_corruption: bool,
    /// Mask only entities; never top up with random tokens.
    #[arg(long)]
    no_random_fill: bool,
    #[arg(long, default_value_t = DEFAULT_SHARD_SIZE)]
    shard_size: usize,
}

#[derive(Subcommand)]
enum Analyze {
    /// Fraction of masked positions that carry a B-/I- gold tag.
    Overlap {
        #[arg(long)]
        data: PathBuf,
        /// CoNLL `token<TAB>tag` file aligned with the emitted token stream.
        #[arg(long)]
        tagged: PathBuf,
        /// Dataset stage; defaults to the last one.
        #[arg(long)]
        stage: Option<usize>,
    },
}

#[derive(Args)]
struct RunCmd {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    min_count: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    topk: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    min_sim: Option<f64>,
    /// Curriculum strategy.
    #[arg(long)]
    curriculum: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// Masking strategy.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    ratio: Option<f64>,
}

fn invalid(e: impl std::fmt::Display) -> Error {
    Error::Validation(e.to_string())
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest { input, min_count, out, tokens } => {
            stages::ingest(&input, min_count, &out, &tokens)?;
        }
        Command::Extract { tokens, dict, out } => {
            stages::extract(&tokens, &dict, &out)?;
        }
        Command::Embed(c) => {
            let lr_decay = match c.lr_decay.as_str() {
                "linear" => LrDecay::Linear,
                "none" => LrDecay::None,
                other => return Err(invalid(format!("unknown --lr-decay {other:?}"))),
            };
            let hp = EmbeddingHyperparams {
                dim: c.dim,
                epochs: c.epochs,
                learning_rate: c.lr,
                window: c.window,
                subsample_threshold: c.subsample,
                negatives: c.negatives,
                seed: c.seed,
                lr_decay,
                ..EmbeddingHyperparams::default()
            };
            hp.validate().map_err(invalid)?;
            if c.workers == 0 {
                return Err(invalid("--workers must be >= 1"));
            }
            stages::embed(&c.tokens, &c.vocab, &c.out, &hp, c.workers, c.binary)?;
        }
        Command::Graph { emb, seeds, concepts, topk, min_sim, no_filter, out } => {
            if topk == 0 {
                return Err(invalid("--topk must be >= 1"));
            }
            let cfg = GraphConfig { topk, min_sim, filter_candidates: !no_filter };
            let meta = stages::graph(&emb, &seeds, &concepts, &cfg, &out)?;
            print!("{}", melt::semantic::counts_table(&meta.counts()));
        }
        Command::Curriculum { graph, strategy, k, warmup, stage, total, warmup_mode, vocab, seeds, out } => {
            let strategy: Strategy = strategy.parse().map_err(invalid)?;
            let warmup_mode: WarmupMode = warmup_mode.parse().map_err(invalid)?;
            let schedule = build_schedule(k, warmup, stage, total).map_err(invalid)?;
            let args = CurriculumArgs { strategy, k, schedule, warmup_mode, vocab: vocab.as_deref(), seeds: seeds.as_deref() };
            stages::curriculum(&graph, &args, &out)?;
        }
        Command::Emit(c) => {
            let cfg = EmitConfig {
                masking: MaskingConfig {
                    target_token_ratio: c.ratio,
                    sequence_length: c.seqlen,
                    seed: c.seed,
                    fallback_random_fill: !c.no_random_fill,
                    bert_corruption: c.bert_corruption,
                    ..MaskingConfig::default()
                },
                strategy: c.strategy.parse::<EmitStrategy>().map_err(invalid)?,
                shard_size: c.shard_size,
            };
            cfg.masking.validate().map_err(invalid)?;
            if cfg.shard_size == 0 {
                return Err(invalid("--shard-size must be >= 1"));
            }
            let args = EmitArgs { plan: c.plan.as_deref(), seeds: c.seeds.as_deref(), generic: c.generic.as_deref() };
            let m = stages::emit(&c.tokens, &args, &cfg, &c.out)?;
            for d in &m.datasets {
                println!("{}\tp_m={:.4}\trealized={:.4}\texamples={}", d.name, d.p_m, d.realized_ratio, d.examples);
            }
        }
        Command::Analyze(Analyze::Overlap { data, tagged, stage }) => {
            let tagged = melt::formats::read_conll(&tagged)?;
            let (name, ratio) = melt::emit::overlap_from_dir(&data, &tagged, stage)?;
            println!("{name}\t{ratio:.6}");
        }
        Command::Run(c) => {
            let (mut cfg, base) = PipelineConfig::load(&c.config)?;
            cfg.apply(&Overrides {
                seed: c.seed,
                workers: c.workers,
                output: c.out.map(|p| std::path::absolute(p).unwrap_or_default()),
                min_count: c.min_count,
                dim: c.dim,
                epochs: c.epochs,
                topk: c.topk,
                min_sim: c.min_sim,
                curriculum: c.curriculum,
                k: c.k,
                masking: c.strategy,
                ratio: c.ratio,
            });
            let (manifest, timings) = melt::pipeline::run_pipeline(&cfg, &base)?;
            for t in &timings.stages {
                let how = if t.cache_hit { "cached" } else { "ran" };
                println!("{:<11} {how:<7} {:.2}s", t.name, t.seconds);
            }
            println!("config {}", manifest.config_hash);
        }
        Command::Report { run } => {
            print!("{}", melt::report::report(&run)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // Usage errors are input errors (1), not clap's default 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::new().parse_filters(&cli.log).format_timestamp(None).init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
