//! Entity indexing, budget calibration and masked-example construction,
//! plus the baseline masking strategies and the tag-overlap statistic.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::matcher::PhraseMatcher;
use crate::vocab::canonical_word;
use crate::{Error, Result};

pub const MASK_SENTINEL: &str = "[MASK]";
pub const DEFAULT_TARGET_RATIO: f64 = 0.15;
pub const DEFAULT_SEQUENCE_LENGTH: usize = 128;
pub const MIN_SEQUENCE_LENGTH: usize = 8;
pub const DIFF_MASKING_RATIO: f64 = 0.25;
pub const DIFF_MASKING_ANCHORS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct MaskingConfig {
    pub target_token_ratio: f64,
    pub sequence_length: usize,
    pub mask_sentinel: String,
    pub seed: u64,
    pub fallback_random_fill: bool,
    /// BERT-style 80/10/10 corruption instead of pure sentinel replacement.
    pub bert_corruption: bool,
}

impl Default for MaskingConfig {
    fn default() -> Self {
        MaskingConfig {
            target_token_ratio: DEFAULT_TARGET_RATIO,
            sequence_length: DEFAULT_SEQUENCE_LENGTH,
            mask_sentinel: String::from(MASK_SENTINEL),
            seed: 42,
            fallback_random_fill: true,
            bert_corruption: false,
        }
    }
}

impl MaskingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_token_ratio > 0.0 && self.target_token_ratio < 1.0) {
            return Err(Error::InvalidParameter(String::from("target ratio must be in (0, 1)")));
        }
        if self.sequence_length < MIN_SEQUENCE_LENGTH {
            return Err(Error::InvalidParameter(String::from("sequence length must be >= 8")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedSpan {
    pub token_start: usize,
    pub token_end: usize,
    pub entity: String,
    /// 1-based stage in which the entity first becomes eligible.
    pub stage: usize,
}

impl IndexedSpan {
    pub fn len(&self) -> usize {
        self.token_end - self.token_start
    }

    pub fn is_empty(&self) -> bool {
        self.token_end == self.token_start
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityIndex {
    pub spans: Vec<IndexedSpan>,
}

impl EntityIndex {
    /// Tokens covered by spans eligible at `stage`.
    pub fn eligible_tokens(&self, stage: usize) -> usize {
        self.spans.iter().filter(|s| s.stage <= stage).map(IndexedSpan::len).sum()
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    entity: String,
    stage: usize,
    case_sensitive: bool,
}

/// Leftmost-longest matcher over the entity universe. Phrases match
/// case-insensitively, except single-token entities with uppercase letters
/// (formulas), which must equal the token's canonical form.
#[derive(Debug, Clone, Default)]
pub struct EntityMatcher {
    matcher: PhraseMatcher<usize>,
    buckets: Vec<Vec<Candidate>>,
}

impl EntityMatcher {
    pub fn new(stage_of: &BTreeMap<String, usize>) -> Self {
        let mut m = EntityMatcher::default();
        for (entity, &stage) in stage_of {
            let phrase: Vec<String> = entity.split(' ').map(str::to_lowercase).collect();
            if phrase.iter().any(String::is_empty) {
                continue;
            }
            let case_sensitive = phrase.len() == 1 && entity.chars().any(char::is_uppercase);
            let cand = Candidate { entity: entity.clone(), stage, case_sensitive };
            match m.matcher.longest_at(&phrase, 0).filter(|(n, _)| *n == phrase.len()) {
                Some((_, &b)) => m.buckets[b].push(cand),
                None => {
                    m.matcher.insert(phrase, m.buckets.len());
                    m.buckets.push(vec![cand]);
                }
            }
        }
        m
    }

    /// Entities of `strata[i]` get stage `i + 1`.
    pub fn from_strata(strata: &[Vec<String>]) -> Self {
        let mut stage_of = BTreeMap::new();
        for (i, s) in strata.iter().enumerate() {
            for e in s {
                stage_of.entry(e.clone()).or_insert(i + 1);
            }
        }
        Self::new(&stage_of)
    }

    /// Entities a sequence may have masked at `stage`.
    pub fn eligible_entities(&self, stage: usize) -> BTreeSet<String> {
        self.buckets.iter().flatten().filter(|c| c.stage <= stage).map(|c| c.entity.clone()).collect()
    }

    /// Every entity at stage 1.
    pub fn single_stage<'a>(entities: impl IntoIterator<Item = &'a str>) -> Self {
        Self::new(&entities.into_iter().map(|e| (e.to_string(), 1)).collect())
    }

    pub fn index<S: AsRef<str>>(&self, tokens: &[S]) -> EntityIndex {
        let lowered: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
        let mut spans = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let hit = self.matcher.longest_at(&lowered, i).and_then(|(n, &b)| {
                self.buckets[b]
                    .iter()
                    .filter(|c| !c.case_sensitive || canonical_word(tokens[i].as_ref()) == c.entity)
                    .min_by_key(|c| c.stage)
                    .map(|c| (n, c))
            });
            match hit {
                Some((n, c)) => {
                    spans.push(IndexedSpan {
                        token_start: i,
                        token_end: i + n,
                        entity: c.entity.clone(),
                        stage: c.stage,
                    });
                    i += n;
                }
                None => {
                    // A case mismatch on the longest phrase may still leave a
                    // shorter single-token entity; try it before moving on.
                    let single = self.matcher.longest_at(&lowered[i..=i], 0).and_then(|(_, &b)| {
                        self.buckets[b]
                            .iter()
                            .filter(|c| {
                                !c.case_sensitive || canonical_word(tokens[i].as_ref()) == c.entity
                            })
                            .min_by_key(|c| c.stage)
                    });
                    if let Some(c) = single {
                        spans.push(IndexedSpan {
                            token_start: i,
                            token_end: i + 1,
                            entity: c.entity.clone(),
                            stage: c.stage,
                        });
                    }
                    i += 1;
                }
            }
        }
        EntityIndex { spans }
    }
}

/// Indexes `tokens` against the cumulative curriculum given as strata.
pub fn index_entities<S: AsRef<str>>(tokens: &[S], strata: &[Vec<String>]) -> EntityIndex {
    EntityMatcher::from_strata(strata).index(tokens)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub p_m: f64,
    /// Fraction of all tokens that entity masking cannot supply even at
    /// `p_m = 1` and must come from random fill.
    pub shortfall: f64,
    /// No eligible entity tokens at all.
    pub fallback_only: bool,
}

/// `p_m = min(1, target * total / entity_tokens)`.
pub fn calibrate_mask_probability(
    entity_tokens: u64,
    total_tokens: u64,
    target_ratio: f64,
) -> Result<Calibration> {
    if total_tokens == 0 {
        return Err(Error::EmptyCorpus);
    }
    if entity_tokens == 0 {
        return Ok(Calibration { p_m: 0.0, shortfall: target_ratio, fallback_only: true });
    }
    let p = target_ratio * total_tokens as f64 / entity_tokens as f64;
    let coverage = entity_tokens as f64 / total_tokens as f64;
    Ok(Calibration {
        p_m: p.min(1.0),
        shortfall: (target_ratio - coverage).max(0.0),
        fallback_only: false,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedExample {
    pub sequence_id: String,
    pub tokens: Vec<String>,
    pub masked_positions: Vec<usize>,
    pub original_targets: Vec<String>,
    pub stage: usize,
    pub strategy: String,
}

impl MaskedExample {
    /// The input sequence with every target substituted back.
    pub fn reconstruct(&self) -> Vec<String> {
        let mut t = self.tokens.clone();
        for (&p, target) in self.masked_positions.iter().zip(&self.original_targets) {
            t[p] = target.clone();
        }
        t
    }

    pub fn masked_fraction(&self) -> f64 {
        self.masked_positions.len() as f64 / self.tokens.len().max(1) as f64
    }
}

/// Integer token budget with expectation exactly `ratio * n`.
fn token_budget<R: Rng + ?Sized>(ratio: f64, n: usize, rng: &mut R) -> usize {
    let exact = ratio * n as f64;
    let base = libm::floor(exact);
    let extra = usize::from(rng.gen::<f64>() < exact - base);
    (base as usize + extra).min(n)
}

/// Masks one sequence with the configured target ratio. See
/// [`mask_sequence_with_ratio`].
pub fn mask_sequence<S: AsRef<str>, R: Rng + ?Sized>(
    tokens: &[S],
    index: &EntityIndex,
    stage: usize,
    p_m: f64,
    cfg: &MaskingConfig,
    rng: &mut R,
) -> Option<MaskedExample> {
    mask_sequence_with_ratio(tokens, index, stage, p_m, cfg.target_token_ratio, cfg, rng)
}

/// Stage 0 masks `ratio` of the tokens uniformly at random. Stage `i >= 1`
/// visits the spans eligible at `i` in random order and masks each whole
/// span with probability `p_m` while it fits in the per-sequence budget
/// (`ratio * len`, stochastically rounded); with random fill enabled the
/// remaining budget is filled from tokens outside any entity span.
/// Sequences shorter than two tokens yield `None`.
pub fn mask_sequence_with_ratio<S: AsRef<str>, R: Rng + ?Sized>(
    tokens: &[S],
    index: &EntityIndex,
    stage: usize,
    p_m: f64,
    ratio: f64,
    cfg: &MaskingConfig,
    rng: &mut R,
) -> Option<MaskedExample> {
    let n = tokens.len();
    if n < 2 {
        return None;
    }
    let budget = token_budget(ratio, n, rng);
    let mut masked = vec![false; n];
    let mut count = 0usize;
    if stage == 0 {
        let mut positions: Vec<usize> = (0..n).collect();
        let (chosen, _) = positions.partial_shuffle(rng, budget);
        chosen.iter().for_each(|&p| masked[p] = true);
    } else {
        let mut eligible: Vec<&IndexedSpan> = index.spans.iter().filter(|s| s.stage <= stage).collect();
        eligible.shuffle(rng);
        for span in eligible {
            if rng.gen::<f64>() < p_m && count + span.len() <= budget {
                masked[span.token_start..span.token_end].iter_mut().for_each(|m| *m = true);
                count += span.len();
            }
        }
        if cfg.fallback_random_fill && count < budget {
            let mut covered = vec![false; n];
            for s in &index.spans {
                covered[s.token_start..s.token_end].iter_mut().for_each(|c| *c = true);
            }
            let mut free: Vec<usize> = (0..n).filter(|&p| !covered[p] && !masked[p]).collect();
            let take = (budget - count).min(free.len());
            let (chosen, _) = free.partial_shuffle(rng, take);
            chosen.iter().for_each(|&p| masked[p] = true);
        }
    }
    let masked_positions: Vec<usize> = (0..n).filter(|&p| masked[p]).collect();
    let original_targets = masked_positions.iter().map(|&p| tokens[p].as_ref().to_string()).collect();
    let mut out: Vec<String> = tokens.iter().map(|t| t.as_ref().to_string()).collect();
    for &p in &masked_positions {
        out[p] = if cfg.bert_corruption {
            let r = rng.gen::<f64>();
            if r < 0.8 {
                cfg.mask_sentinel.clone()
            } else if r < 0.9 {
                tokens[rng.gen_range(0..n)].as_ref().to_string()
            } else {
                out[p].clone()
            }
        } else {
            cfg.mask_sentinel.clone()
        };
    }
    Some(MaskedExample {
        sequence_id: String::new(),
        tokens: out,
        masked_positions,
        original_targets,
        stage,
        strategy: String::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    pub id: String,
    pub tokens: Vec<String>,
}

/// Concatenates a document's sentences into windows of at most `seq_len`
/// tokens. Whole sentences are kept together when they fit; longer ones are
/// cut. Windows shorter than [`MIN_SEQUENCE_LENGTH`] are dropped. Windows
/// never cross documents.
pub fn pack_document<S: AsRef<str>>(doc_id: &str, sentences: &[Vec<S>], seq_len: usize) -> Vec<Sequence> {
    let mut windows: Vec<Vec<String>> = Vec::new();
    let mut cur: Vec<String> = Vec::new();
    for sentence in sentences {
        if !cur.is_empty() && cur.len() + sentence.len() > seq_len {
            windows.push(core::mem::take(&mut cur));
        }
        for tok in sentence {
            if cur.len() == seq_len {
                windows.push(core::mem::take(&mut cur));
            }
            cur.push(tok.as_ref().to_string());
        }
    }
    if !cur.is_empty() {
        windows.push(cur);
    }
    windows
        .into_iter()
        .filter(|w| w.len() >= MIN_SEQUENCE_LENGTH)
        .enumerate()
        .map(|(j, tokens)| Sequence { id: alloc::format!("{doc_id}#{j}"), tokens })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineStrategy {
    RandomDsp,
    EntityOnly,
    DiffMasking,
}

impl BaselineStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineStrategy::RandomDsp => "random",
            BaselineStrategy::EntityOnly => "entity-only",
            BaselineStrategy::DiffMasking => "diff-masking",
        }
    }

    pub fn target_ratio(self, default: f64) -> f64 {
        match self {
            BaselineStrategy::DiffMasking => DIFF_MASKING_RATIO,
            _ => default,
        }
    }
}

impl core::str::FromStr for BaselineStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" | "random-dsp" | "dsp" => Ok(BaselineStrategy::RandomDsp),
            "entity-only" | "entitybert" => Ok(BaselineStrategy::EntityOnly),
            "diff-masking" | "diff" => Ok(BaselineStrategy::DiffMasking),
            other => Err(Error::UnknownStrategy(other.to_string())),
        }
    }
}

/// The `n` words with the highest `target / (generic + 1)` ratio, ties by
/// word. Only words containing a letter are considered.
pub fn select_anchors(
    target: &BTreeMap<String, u64>,
    generic: &BTreeMap<String, u64>,
    n: usize,
) -> Vec<String> {
    let mut scored: Vec<(f64, &String)> = target
        .iter()
        .filter(|(w, &c)| c > 0 && w.chars().any(char::is_alphabetic))
        .map(|(w, &c)| (c as f64 / (generic.get(w).copied().unwrap_or(0) as f64 + 1.0), w))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.into_iter().take(n).map(|(_, w)| w.clone()).collect()
}

/// Fraction of masked positions whose gold tag starts with `B-` or `I-`.
///
/// The examples, reconstructed and concatenated in order, must reproduce
/// the tagged token stream exactly.
pub fn overlap_ratio<T: AsRef<str>, G: AsRef<str>>(
    examples: &[MaskedExample],
    tagged: &[(T, G)],
) -> Result<f64> {
    let mut pos = 0usize;
    let (mut masked, mut hits) = (0u64, 0u64);
    for ex in examples {
        let original = ex.reconstruct();
        for (i, tok) in original.iter().enumerate() {
            let Some((gold, _)) = tagged.get(pos + i) else {
                return Err(Error::TokenMismatch {
                    position: pos + i,
                    expected: String::from("<end of tagged data>"),
                    found: tok.clone(),
                });
            };
            if gold.as_ref() != tok {
                return Err(Error::TokenMismatch {
                    position: pos + i,
                    expected: gold.as_ref().to_string(),
                    found: tok.clone(),
                });
            }
        }
        for &p in &ex.masked_positions {
            masked += 1;
            let tag = tagged[pos + p].1.as_ref();
            hits += u64::from(tag.starts_with("B-") || tag.starts_with("I-"));
        }
        pos += original.len();
    }
    if pos != tagged.len() {
        return Err(Error::TokenMismatch {
            position: pos,
            expected: tagged[pos].0.as_ref().to_string(),
            found: String::from("<end of masked data>"),
        });
    }
    Ok(if masked == 0 { 0.0 } else { hits as f64 / masked as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn strata(groups: &[&[&str]]) -> Vec<Vec<String>> {
        groups.iter().map(|g| g.iter().map(|s| s.to_string()).collect()).collect()
    }

    #[test]
    fn index_assigns_first_stage() {
        let idx = index_entities(&["LiCoO2", "cathode"], &strata(&[&["LiCoO2"], &["cathode"]]));
        let got: Vec<(usize, usize, usize)> =
            idx.spans.iter().map(|s| (s.token_start, s.token_end, s.stage)).collect();
        assert_eq!(got, vec![(0, 1, 1), (1, 2, 2)]);
        assert!(index_entities(&["no", "entities"], &strata(&[&["x"]])).spans.is_empty());
        let idx = index_entities(&["the", "melting", "point"], &strata(&[&["point", "melting point"]]));
        assert_eq!(idx.spans.len(), 1);
        assert_eq!(idx.spans[0].entity, "melting point");
    }

    #[test]
    fn formula_entities_are_case_sensitive() {
        let m = EntityMatcher::single_stage(["Co", "cathode"]);
        assert_eq!(m.index(&["co", "Cathode"]).spans.len(), 1);
        assert_eq!(m.index(&["Co"]).spans[0].entity, "Co");
    }

    #[test]
    fn calibration_cases() {
        let c = calibrate_mask_probability(30, 100, 0.15).unwrap();
        assert!((c.p_m - 0.5).abs() < 1e-12);
        let c = calibrate_mask_probability(15, 100, 0.15).unwrap();
        assert_eq!(c.p_m, 1.0);
        let c = calibrate_mask_probability(5, 100, 0.15).unwrap();
        assert_eq!(c.p_m, 1.0);
        assert!((c.shortfall - 0.10).abs() < 1e-12);
        let c = calibrate_mask_probability(0, 100, 0.15).unwrap();
        assert!(c.fallback_only && c.p_m == 0.0);
        assert_eq!(calibrate_mask_probability(0, 0, 0.15), Err(Error::EmptyCorpus));
    }

    #[test]
    fn full_probability_masks_exactly_the_entities() {
        // 20 tokens, 3 entity tokens = 15%.
        let mut toks: Vec<String> = (0..20).map(|i| alloc::format!("w{i}")).collect();
        toks[2] = "H2O".into();
        toks[9] = "NaCl".into();
        toks[10] = "KCl".into();
        let idx = EntityMatcher::single_stage(["H2O", "NaCl", "KCl"]).index(&toks);
        let cfg = MaskingConfig::default();
        let mut rng = seeded(3);
        for _ in 0..20 {
            let ex = mask_sequence(&toks, &idx, 1, 1.0, &cfg, &mut rng).unwrap();
            assert_eq!(ex.masked_positions, vec![2, 9, 10]);
            assert_eq!(ex.reconstruct(), toks);
        }
    }

    #[test]
    fn short_sequences_are_skipped() {
        let cfg = MaskingConfig::default();
        assert!(mask_sequence(&["x"], &EntityIndex::default(), 0, 0.0, &cfg, &mut seeded(1)).is_none());
    }

    #[test]
    fn packing_respects_documents_and_length() {
        let sent = |n: usize| (0..n).map(|i| alloc::format!("t{i}")).collect::<Vec<_>>();
        let seqs = pack_document("d", &[sent(5), sent(5), sent(3)], 10);
        assert_eq!(seqs.len(), 1, "two sentences fill one window, the 3-token tail is dropped");
        assert_eq!(seqs[0].tokens.len(), 10);
        assert_eq!(seqs[0].id, "d#0");
        let seqs = pack_document("d", &[sent(25)], 10);
        assert_eq!(seqs.iter().map(|s| s.tokens.len()).collect::<Vec<_>>(), vec![10, 10]);
    }

    #[test]
    fn anchors_prefer_target_only_words() {
        let t: BTreeMap<String, u64> =
            [("lattice", 10), ("water", 10), (".", 99)].iter().map(|(w, c)| (w.to_string(), *c)).collect();
        let g: BTreeMap<String, u64> = [("water", 10)].iter().map(|(w, c)| (w.to_string(), *c)).collect();
        assert_eq!(select_anchors(&t, &g, 20), vec!["lattice".to_string(), "water".to_string()]);
    }

    #[test]
    fn overlap_ratio_bounds() {
        let ex = MaskedExample {
            sequence_id: "s".into(),
            tokens: vec!["[MASK]".into(), "b".into()],
            masked_positions: vec![0],
            original_targets: vec!["a".into()],
            stage: 1,
            strategy: "melt".into(),
        };
        assert_eq!(overlap_ratio(core::slice::from_ref(&ex), &[("a", "B-MAT"), ("b", "O")]).unwrap(), 1.0);
        assert_eq!(overlap_ratio(core::slice::from_ref(&ex), &[("a", "O"), ("b", "I-MAT")]).unwrap(), 0.0);
        assert!(matches!(
            overlap_ratio(&[ex], &[("a", "O"), ("c", "O")]),
            Err(Error::TokenMismatch { position: 1, .. })
        ));
    }
}
