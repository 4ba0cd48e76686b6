//! Human-readable run summary.

use std::fmt::Write as _;
use std::path::Path;

use crate::emit;
use crate::error::Result;
use crate::pipeline::{self, CURRICULUM, EMIT, GRAPH};
use crate::plan;
use crate::semantic;

/// Summarizes a finished run. Missing artifacts are listed at the end
/// instead of failing; only a missing `run.json` is an error.
pub fn report(run_dir: &Path) -> Result<String> {
    let run = pipeline::read_run(run_dir)?;
    let cfg = &run.config;
    let mut out = String::new();
    let mut missing = Vec::new();
    let w = &mut out;

    writeln!(w, "melt {}  config {}", run.tool_version, &run.config_hash[..12]).unwrap();
    writeln!(w, "\nEmbedding hyperparameters").unwrap();
    let e = &cfg.embedding;
    let rows: [(&str, String); 8] = [
        ("dimension", e.dim.to_string()),
        ("epochs", e.epochs.to_string()),
        ("learning rate", e.lr.to_string()),
        ("window size", e.window.to_string()),
        ("subsampling", e.subsample.to_string()),
        ("negative samples", e.negatives.to_string()),
        ("minimum count", cfg.ingest.min_count.to_string()),
        ("lr decay", e.lr_decay.clone()),
    ];
    for (k, v) in rows {
        writeln!(w, "  {k:<18} {v}").unwrap();
    }

    match semantic::read_meta(&run_dir.join(GRAPH)) {
        Ok(meta) => {
            writeln!(w, "\nEntities (top-k = {}, min similarity = {})", meta.topk, meta.min_sim).unwrap();
            for line in semantic::counts_table(&meta.counts()).lines() {
                writeln!(w, "  {line}").unwrap();
            }
            writeln!(w, "  seeds {}  expanded {}  edges {}", meta.seed_count, meta.expanded_count, meta.edges).unwrap();
        }
        Err(_) => missing.push(format!("{GRAPH}/{}", semantic::META_FILE)),
    }

    match plan::read_plan_file(&run_dir.join(CURRICULUM)) {
        Ok(p) => {
            writeln!(w, "\nCurriculum {} (K = {}, warm-up {})", p.strategy, p.k, p.warmup_mode).unwrap();
            writeln!(w, "  {:<6} {:>8} {:>8} {:>14}", "stage", "|N_i|", "|G_i|", "degree range").unwrap();
            for s in &p.strata {
                let range = match (s.min_degree, s.max_degree) {
                    (Some(lo), Some(hi)) => format!("{lo}..={hi}"),
                    _ => "-".into(),
                };
                writeln!(w, "  {:<6} {:>8} {:>8} {:>14}", s.stage, s.size, s.cumulative_size, range).unwrap();
            }
            let phases: Vec<&str> = p.windows.iter().map(|x| x.phase.as_str()).collect();
            writeln!(w, "  phases {}", phases.join(" ")).unwrap();
        }
        Err(_) => missing.push(format!("{CURRICULUM}/{}", plan::PLAN_FILE)),
    }

    match emit::read_manifest(&run_dir.join(EMIT)) {
        Ok(m) => {
            writeln!(w, "\nMasking ({}, {} sequences)", m.strategy, m.sequences).unwrap();
            writeln!(w, "  {:<10} {:>8} {:>8} {:>10} {:>9}", "dataset", "p_m", "target", "realized", "examples").unwrap();
            for d in &m.datasets {
                writeln!(
                    w,
                    "  {:<10} {:>8.4} {:>8.4} {:>10.4} {:>9}",
                    d.name, d.p_m, d.target_ratio, d.realized_ratio, d.examples
                )
                .unwrap();
                for f in &d.files {
                    if !run_dir.join(EMIT).join(f).exists() {
                        missing.push(format!("{EMIT}/{f}"));
                    }
                }
            }
            if let Some(a) = &m.anchors {
                writeln!(w, "  anchors {}", a.join(" ")).unwrap();
            }
        }
        Err(_) => missing.push(format!("{EMIT}/{}", emit::MANIFEST_FILE)),
    }

    for stage in &run.stages {
        for rel in stage.outputs.keys() {
            if !run_dir.join(rel).exists() && !missing.contains(rel) {
                missing.push(rel.clone());
            }
        }
    }
    if !missing.is_empty() {
        writeln!(w, "\nMissing artifacts").unwrap();
        for m in &missing {
            writeln!(w, "  {m}").unwrap();
        }
    }
    Ok(out)
}
