//! Semantic graph construction and its on-disk directory.

use std::collections::BTreeMap;
use std::path::Path;

use log::warn;
use melt_core::chem::SeedEntitySet;
use melt_core::embed::Embeddings;
use melt_core::graph::{
    concept_vector, entity_counts_report, expand_seed, node_degrees, ConceptSpec, ConceptVector, EntityCounts,
    GraphConfig, SemanticGraph,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{self, NodeRecord};

pub const EDGES_FILE: &str = "edges.tsv";
pub const NODES_FILE: &str = "nodes.tsv";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone)]
pub struct GraphArtifacts {
    pub graph: SemanticGraph,
    pub degrees: BTreeMap<String, u64>,
    pub concepts: Vec<ConceptVector>,
    /// Concepts none of whose pairs are embedded.
    pub skipped_concepts: Vec<String>,
    pub counts: EntityCounts,
}

/// Concept vectors for every spec with at least one embedded pair.
pub fn concept_vectors(specs: &[ConceptSpec], emb: &Embeddings) -> Result<(Vec<ConceptVector>, Vec<String>)> {
    let mut used = Vec::new();
    let mut skipped = Vec::new();
    for spec in specs {
        match concept_vector(spec, emb) {
            Ok(cv) => used.push(cv),
            Err(melt_core::Error::NoEmbeddablePairs { .. }) => {
                warn!("concept {} has no embeddable pairs; skipped", spec.name);
                skipped.push(spec.name.clone());
            }
            Err(e) => return Err(e.into()),
        }
    }
    if used.is_empty() {
        return Err(Error::Input("no concept has an embeddable pair".into()));
    }
    Ok((used, skipped))
}

/// Expands seeds in parallel and merges in seed order, so the result equals
/// the sequential build.
pub fn build(
    emb: &Embeddings,
    seeds: &SeedEntitySet,
    specs: &[ConceptSpec],
    cfg: &GraphConfig,
) -> Result<GraphArtifacts> {
    if cfg.topk == 0 {
        return Err(Error::Validation("topk must be >= 1".into()));
    }
    let (concepts, skipped_concepts) = concept_vectors(specs, emb)?;
    let ordered = seeds.ordered();
    let expansions = ordered
        .par_iter()
        .map(|(s, _)| expand_seed(s, &concepts, emb, cfg))
        .collect::<melt_core::Result<Vec<_>>>()?;
    let graph = SemanticGraph::assemble(seeds, expansions)?;
    if graph.degenerate_queries > 0 {
        warn!("{} degenerate expansion queries returned no neighbours", graph.degenerate_queries);
    }
    let degrees = node_degrees(&graph);
    let counts = entity_counts_report(&graph, seeds);
    Ok(GraphArtifacts { graph, degrees, concepts, skipped_concepts, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptMeta {
    pub name: String,
    pub used_pairs: usize,
    pub dropped_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub topk: usize,
    pub min_sim: f64,
    pub filter_candidates: bool,
    pub nodes: usize,
    pub edges: usize,
    pub seed_count: usize,
    pub expanded_count: usize,
    pub total_unique: usize,
    pub concepts: Vec<ConceptMeta>,
    pub skipped_concepts: Vec<String>,
    pub skipped_seeds: Vec<String>,
    pub degenerate_queries: usize,
}

impl GraphMeta {
    pub fn counts(&self) -> EntityCounts {
        EntityCounts {
            seed_count: self.seed_count,
            expanded_count: self.expanded_count,
            total_unique: self.total_unique,
        }
    }
}

pub fn write_dir(dir: &Path, a: &GraphArtifacts, cfg: &GraphConfig) -> Result<GraphMeta> {
    formats::write_edges(&dir.join(EDGES_FILE), &a.graph.edges)?;
    let nodes: BTreeMap<String, NodeRecord> = a
        .graph
        .nodes
        .iter()
        .map(|(n, &is_seed)| (n.clone(), NodeRecord { degree: a.degrees[n], is_seed }))
        .collect();
    formats::write_nodes(&dir.join(NODES_FILE), &nodes)?;
    let meta = GraphMeta {
        topk: cfg.topk,
        min_sim: cfg.min_sim,
        filter_candidates: cfg.filter_candidates,
        nodes: a.graph.nodes.len(),
        edges: a.graph.edges.len(),
        seed_count: a.counts.seed_count,
        expanded_count: a.counts.expanded_count,
        total_unique: a.counts.total_unique,
        concepts: a
            .concepts
            .iter()
            .map(|c| ConceptMeta { name: c.name.clone(), used_pairs: c.used_pairs, dropped_pairs: c.dropped_pairs })
            .collect(),
        skipped_concepts: a.skipped_concepts.clone(),
        skipped_seeds: a.graph.skipped_seeds.clone(),
        degenerate_queries: a.graph.degenerate_queries,
    };
    crate::write_json(&dir.join(META_FILE), &meta)?;
    Ok(meta)
}

pub fn read_meta(dir: &Path) -> Result<GraphMeta> {
    crate::read_json(&dir.join(META_FILE))
}

/// Node degrees as stored in `nodes.tsv`.
pub fn read_degrees(dir: &Path) -> Result<BTreeMap<String, u64>> {
    Ok(formats::read_nodes(&dir.join(NODES_FILE))?.into_iter().map(|(k, n)| (k, n.degree)).collect())
}

/// The two-row unique-entity table, with and without expansion.
pub fn counts_table(c: &EntityCounts) -> String {
    let rows = [("MELT", c.total_unique), ("MELT w/o expansion", c.seed_count)];
    let mut out = format!("{:<20} {:>16}\n", "", "unique entities");
    for (name, n) in rows {
        out.push_str(&format!("{name:<20} {n:>16}\n"));
    }
    out
}
