//! Concept vectors, compositional top-k expansion and the semantic graph.
//!
//! A concept vector is the mean of `e(subject) - e(object)` over exemplar
//! pairs. Expanding entity `w` along concept `R` ranks every vocabulary word
//! `v` by `cos(e(w) + e(R), e(v))` and keeps the top k.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::chem::SeedEntitySet;
use crate::embed::{l2_norm, nearest_neighbors, Embeddings, Neighbor};
use crate::vocab::canonical_word;
use crate::{Error, Result};

pub const SIX_CONCEPTS: [&str; 6] =
    ["Material", "Property", "Application", "Characterization", "Descriptor", "SymmetryPhase"];

pub const SEVEN_CONCEPTS: [&str; 7] = [
    "Material",
    "Property",
    "Application",
    "SynthesisMethod",
    "CharacterizationMethod",
    "Descriptor",
    "SymmetryPhase",
];

/// English function words never proposed as expansion entities.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "all", "also", "am", "an", "and", "any", "are", "as",
    "at", "be", "because", "been", "before", "being", "below", "between", "both", "but", "by",
    "can", "could", "did", "do", "does", "doing", "down", "during", "each", "et", "al", "few",
    "for", "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "him",
    "his", "how", "however", "i", "if", "in", "into", "is", "it", "its", "itself", "just", "may",
    "me", "might", "more", "most", "must", "my", "no", "nor", "not", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "out", "over", "own", "same", "she", "should", "so",
    "some", "such", "than", "that", "the", "their", "theirs", "them", "then", "there", "these",
    "they", "this", "those", "through", "thus", "to", "too", "under", "until", "up", "upon", "very",
    "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom", "why", "will",
    "with", "within", "without", "would", "you", "your", "using", "used", "use", "show", "shows",
    "shown", "here", "via",
];

/// True for words that may join the entity universe through expansion:
/// they contain a letter and are not function words.
pub fn is_expansion_candidate(word: &str) -> bool {
    word.chars().any(char::is_alphabetic) && !STOPWORDS.contains(&word)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptSpec {
    pub name: String,
    /// (subject, object) exemplars.
    pub pairs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptVector {
    pub name: String,
    pub vector: Vec<f64>,
    pub used_pairs: usize,
    pub dropped_pairs: usize,
}

fn lookup<'e>(emb: &'e Embeddings, word: &str) -> Option<&'e [f64]> {
    emb.vector(word).or_else(|| emb.vector(&canonical_word(word)))
}

pub fn concept_vector(spec: &ConceptSpec, emb: &Embeddings) -> Result<ConceptVector> {
    let mut sum: Option<Vec<f64>> = None;
    let (mut used, mut dropped) = (0usize, 0usize);
    for (a, b) in &spec.pairs {
        let (Some(ea), Some(eb)) = (lookup(emb, a), lookup(emb, b)) else {
            dropped += 1;
            continue;
        };
        let diff = ea.iter().zip(eb).map(|(x, y)| x - y);
        match sum.as_mut() {
            None => sum = Some(diff.collect()),
            Some(acc) => acc.iter_mut().zip(diff).for_each(|(s, d)| *s += d),
        }
        used += 1;
    }
    let Some(mut vector) = sum else {
        return Err(Error::NoEmbeddablePairs { concept: spec.name.clone() });
    };
    let n = used as f64;
    vector.iter_mut().for_each(|x| *x /= n);
    Ok(ConceptVector { name: spec.name.clone(), vector, used_pairs: used, dropped_pairs: dropped })
}

/// Top-k words for an arbitrary query; a zero-norm query yields no
/// neighbors rather than an error.
pub fn expand_query(
    query: &[f64],
    emb: &Embeddings,
    k: usize,
    exclude: impl Fn(&str) -> bool,
) -> Result<Vec<Neighbor>> {
    if query.len() == emb.dim() && l2_norm(query) == 0.0 {
        return Ok(Vec::new());
    }
    nearest_neighbors(emb, query, k, exclude)
}

pub fn compositional_query(entity: &[f64], concept: &ConceptVector) -> Result<Vec<f64>> {
    if entity.len() != concept.vector.len() {
        return Err(Error::DimensionMismatch { expected: entity.len(), found: concept.vector.len() });
    }
    Ok(entity.iter().zip(&concept.vector).map(|(a, b)| a + b).collect())
}

/// Top-k words by `cos(e(entity) + e(R), e(v))`, excluding the entity.
pub fn expand_entity(
    entity: &str,
    concept: &ConceptVector,
    emb: &Embeddings,
    k: usize,
) -> Result<Vec<Neighbor>> {
    let ev = lookup(emb, entity)
        .ok_or_else(|| Error::InvalidParameter(alloc::format!("entity {entity:?} has no embedding")))?;
    let query = compositional_query(ev, concept)?;
    expand_query(&query, emb, k, |w| w == entity)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphConfig {
    pub topk: usize,
    /// Expansion words below this similarity are dropped; `-1` disables.
    pub min_sim: f64,
    /// Restrict expansion words to [`is_expansion_candidate`].
    pub filter_candidates: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig { topk: 5, min_sim: 0.3, filter_candidates: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub concept: String,
    pub similarity: f64,
}

/// Edges proposed for one seed across all concepts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeedExpansion {
    pub seed: String,
    pub embedded: bool,
    pub edges: Vec<Edge>,
    pub degenerate_queries: usize,
}

pub fn expand_seed(
    seed: &str,
    concepts: &[ConceptVector],
    emb: &Embeddings,
    cfg: &GraphConfig,
) -> Result<SeedExpansion> {
    let mut out = SeedExpansion { seed: seed.to_string(), ..Default::default() };
    let Some(ev) = emb.vector(seed) else {
        return Ok(out);
    };
    out.embedded = true;
    for concept in concepts {
        let query = compositional_query(ev, concept)?;
        if l2_norm(&query) == 0.0 {
            out.degenerate_queries += 1;
            continue;
        }
        let exclude = |w: &str| w == seed || (cfg.filter_candidates && !is_expansion_candidate(w));
        for n in expand_query(&query, emb, cfg.topk, exclude)? {
            if n.similarity >= cfg.min_sim {
                out.edges.push(Edge {
                    from: seed.to_string(),
                    to: n.word,
                    concept: concept.name.clone(),
                    similarity: n.similarity,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SemanticGraph {
    /// Node -> is_seed.
    pub nodes: BTreeMap<String, bool>,
    /// Directed seed -> neighbor, in seed order then concept order then rank.
    pub edges: Vec<Edge>,
    /// Seeds without an embedding; they stay in the graph as isolated nodes.
    pub skipped_seeds: Vec<String>,
    pub degenerate_queries: usize,
}

impl SemanticGraph {
    /// Merges per-seed expansions (given in seed order) into one graph.
    pub fn assemble(
        seeds: &SeedEntitySet,
        expansions: impl IntoIterator<Item = SeedExpansion>,
    ) -> Result<SemanticGraph> {
        let mut g = SemanticGraph::default();
        for (s, _) in seeds.iter() {
            g.nodes.insert(s.to_string(), true);
        }
        let mut seen = BTreeSet::new();
        let mut any_embedded = false;
        for exp in expansions {
            any_embedded |= exp.embedded;
            if !exp.embedded {
                g.skipped_seeds.push(exp.seed);
                continue;
            }
            g.degenerate_queries += exp.degenerate_queries;
            for e in exp.edges {
                if e.from == e.to || !seen.insert((e.from.clone(), e.to.clone(), e.concept.clone())) {
                    continue;
                }
                g.nodes.entry(e.to.clone()).or_insert(false);
                g.edges.push(e);
            }
        }
        if !any_embedded {
            return Err(Error::NoEmbeddedSeeds);
        }
        Ok(g)
    }

    pub fn is_seed(&self, node: &str) -> bool {
        self.nodes.get(node).copied().unwrap_or(false)
    }
}

pub fn build_semantic_graph(
    seeds: &SeedEntitySet,
    concepts: &[ConceptVector],
    emb: &Embeddings,
    cfg: &GraphConfig,
) -> Result<SemanticGraph> {
    if cfg.topk == 0 {
        return Err(Error::InvalidParameter(String::from("topk must be >= 1")));
    }
    let expansions = seeds
        .ordered()
        .into_iter()
        .map(|(s, _)| expand_seed(s, concepts, emb, cfg))
        .collect::<Result<Vec<_>>>()?;
    SemanticGraph::assemble(seeds, expansions)
}

/// Undirected degree: edges incident to the node, summed over concepts.
pub fn node_degrees(graph: &SemanticGraph) -> BTreeMap<String, u64> {
    let mut d: BTreeMap<String, u64> = graph.nodes.keys().map(|n| (n.clone(), 0)).collect();
    for e in &graph.edges {
        *d.entry(e.from.clone()).or_insert(0) += 1;
        *d.entry(e.to.clone()).or_insert(0) += 1;
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntityCounts {
    pub seed_count: usize,
    pub expanded_count: usize,
    pub total_unique: usize,
}

pub fn entity_counts_report(graph: &SemanticGraph, seeds: &SeedEntitySet) -> EntityCounts {
    let expanded_count = graph.nodes.keys().filter(|n| !seeds.contains(n)).count();
    EntityCounts {
        seed_count: seeds.len(),
        expanded_count,
        total_unique: seeds.len() + expanded_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::EntityKind;
    use alloc::vec;

    fn emb(rows: &[(&str, [f64; 2])]) -> Embeddings {
        let words = rows.iter().map(|(w, _)| w.to_string()).collect();
        let data = rows.iter().flat_map(|(_, v)| *v).collect();
        Embeddings::new(words, 2, data).unwrap()
    }

    fn spec(pairs: &[(&str, &str)]) -> ConceptSpec {
        ConceptSpec {
            name: "Property".into(),
            pairs: pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }

    #[test]
    fn concept_vector_arithmetic() {
        let e = emb(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0]), ("c", [2.0, 2.0]), ("d", [1.0, 1.0])]);
        let cv = concept_vector(&spec(&[("a", "b"), ("c", "d")]), &e).unwrap();
        assert_eq!(cv.vector, vec![1.0, 0.0]);
        assert_eq!(cv.used_pairs, 2);
        let cv = concept_vector(&spec(&[("a", "b"), ("b", "a"), ("a", "zz")]), &e).unwrap();
        assert_eq!(cv.vector, vec![0.0, 0.0]);
        assert_eq!(cv.dropped_pairs, 1);
        assert!(matches!(
            concept_vector(&spec(&[("x", "y")]), &e),
            Err(Error::NoEmbeddablePairs { .. })
        ));
    }

    #[test]
    fn zero_concept_reduces_to_nearest_neighbor() {
        let e = emb(&[("a", [1.0, 0.1]), ("b", [1.0, 0.0]), ("c", [0.0, 1.0])]);
        let zero = ConceptVector { name: "R".into(), vector: vec![0.0, 0.0], used_pairs: 1, dropped_pairs: 0 };
        let got = expand_entity("a", &zero, &e, 1).unwrap();
        assert_eq!(got[0].word, "b");
    }

    #[test]
    fn degenerate_query_is_empty() {
        let e = emb(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0])]);
        let cancel = ConceptVector { name: "R".into(), vector: vec![-1.0, 0.0], used_pairs: 1, dropped_pairs: 0 };
        assert!(expand_entity("a", &cancel, &e, 3).unwrap().is_empty());
    }

    #[test]
    fn graph_shape_and_degrees() {
        let e = emb(&[
            ("FeO3", [1.0, 0.0]),
            ("oxide", [0.9, 0.1]),
            ("magnet", [0.8, 0.3]),
            ("film", [0.7, 0.5]),
            ("the", [1.0, 0.01]),
        ]);
        let mut seeds = SeedEntitySet::new();
        seeds.add("FeO3", EntityKind::Formula, 3);
        seeds.add("melting point", EntityKind::DictionaryTerm, 1);
        let zero = ConceptVector { name: "Property".into(), vector: vec![0.0, 0.0], used_pairs: 1, dropped_pairs: 0 };
        let cfg = GraphConfig { topk: 3, min_sim: -1.0, filter_candidates: true };
        let g = build_semantic_graph(&seeds, &[zero], &e, &cfg).unwrap();
        assert_eq!(g.edges.len(), 3);
        assert!(!g.nodes.contains_key("the"));
        assert_eq!(g.skipped_seeds, vec!["melting point".to_string()]);
        let d = node_degrees(&g);
        assert_eq!(d["FeO3"], 3);
        assert_eq!(d["melting point"], 0);
        assert_eq!(d.values().sum::<u64>(), 2 * g.edges.len() as u64);
        let r = entity_counts_report(&g, &seeds);
        assert_eq!(r, EntityCounts { seed_count: 2, expanded_count: 3, total_unique: 5 });
    }

    #[test]
    fn no_embedded_seed_is_an_error() {
        let e = emb(&[("a", [1.0, 0.0])]);
        let mut seeds = SeedEntitySet::new();
        seeds.add("zz", EntityKind::Formula, 1);
        let cv = ConceptVector { name: "R".into(), vector: vec![0.0, 0.0], used_pairs: 1, dropped_pairs: 0 };
        assert_eq!(
            build_semantic_graph(&seeds, &[cv], &e, &GraphConfig::default()),
            Err(Error::NoEmbeddedSeeds)
        );
    }
}
