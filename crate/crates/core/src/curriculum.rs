//! Difficulty strata, cumulative entity sets and the training-step schedule.
//!
//! Entities are ranked (by node degree for the main strategy), cut into `K`
//! contiguous strata `N_1..N_K` with `N_1` the easiest, and accumulated
//! into nested sets `G_i = G_{i-1} ∪ N_i`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

pub const DEFAULT_STAGES: usize = 3;
pub const DEFAULT_WARMUP_STEPS: u64 = 10_000;
pub const DEFAULT_STAGE_STEPS: u64 = 10_000;
pub const DEFAULT_TOTAL_STEPS: u64 = 100_000;
pub const RAMP_START_RATIO: f64 = 0.10;
pub const RAMP_END_RATIO: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    NodeDegree,
    Frequency,
    Concept,
    MaskingRatio,
    Reverse,
    None,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::NodeDegree => "node-degree",
            Strategy::Frequency => "frequency",
            Strategy::Concept => "concept",
            Strategy::MaskingRatio => "masking-ratio",
            Strategy::Reverse => "reverse",
            Strategy::None => "none",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "node-degree" | "nodedegree" | "melt" => Strategy::NodeDegree,
            "frequency" => Strategy::Frequency,
            "concept" => Strategy::Concept,
            "masking-ratio" | "maskingratio" => Strategy::MaskingRatio,
            "reverse" => Strategy::Reverse,
            "none" => Strategy::None,
            _ => return Err(Error::UnknownStrategy(s.to_string())),
        })
    }
}

/// Stratum sizes for `n` entities in `k` groups: the first `n mod k`
/// groups hold `⌈n/k⌉`, the rest `⌊n/k⌋`, so no stratum is empty.
pub fn split_sizes(n: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidParameter(String::from("K must be >= 1")));
    }
    if k > n {
        return Err(Error::MoreStagesThanEntities { stages: k, entities: n });
    }
    let (base, extra) = (n / k, n % k);
    Ok((0..k).map(|i| base + usize::from(i < extra)).collect())
}

/// Cuts an already ranked list into `k` contiguous strata.
pub fn split_ranked(ranked: Vec<String>, k: usize) -> Result<Vec<Vec<String>>> {
    let sizes = split_sizes(ranked.len(), k)?;
    let mut it = ranked.into_iter();
    Ok(sizes.into_iter().map(|s| it.by_ref().take(s).collect()).collect())
}

/// Entities ordered by score descending, then name ascending.
fn rank_desc(scores: &BTreeMap<String, u64>) -> Vec<String> {
    let mut v: Vec<(&String, u64)> = scores.iter().map(|(k, &s)| (k, s)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    v.into_iter().map(|(k, _)| k.clone()).collect()
}

/// Highest-degree entities first: `N_1` is the easiest stratum.
pub fn stratify_by_degree(degrees: &BTreeMap<String, u64>, k: usize) -> Result<Vec<Vec<String>>> {
    split_ranked(rank_desc(degrees), k)
}

pub fn stratify_by_frequency(
    frequencies: &BTreeMap<String, u64>,
    k: usize,
) -> Result<Vec<Vec<String>>> {
    split_ranked(rank_desc(frequencies), k)
}

/// Ascending sum of the frequency rank and the degree rank (both 0-based,
/// descending score), ties by name. Entities missing from `frequencies`
/// count as frequency 0.
pub fn stratify_by_concept(
    degrees: &BTreeMap<String, u64>,
    frequencies: &BTreeMap<String, u64>,
    k: usize,
) -> Result<Vec<Vec<String>>> {
    let freq: BTreeMap<String, u64> =
        degrees.keys().map(|e| (e.clone(), frequencies.get(e).copied().unwrap_or(0))).collect();
    let rank_of = |ranked: Vec<String>| -> BTreeMap<String, usize> {
        ranked.into_iter().enumerate().map(|(i, e)| (e, i)).collect()
    };
    let (dr, fr) = (rank_of(rank_desc(degrees)), rank_of(rank_desc(&freq)));
    let mut v: Vec<(usize, &String)> = degrees.keys().map(|e| (dr[e] + fr[e], e)).collect();
    v.sort();
    split_ranked(v.into_iter().map(|(_, e)| e.clone()).collect(), k)
}

pub fn cumulative_sets(strata: &[Vec<String>]) -> Vec<BTreeSet<String>> {
    let mut acc = BTreeSet::new();
    strata
        .iter()
        .map(|n| {
            acc.extend(n.iter().cloned());
            acc.clone()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Warmup,
    /// 1-based curriculum stage.
    Stage(usize),
}

impl Phase {
    /// 0 for warm-up, otherwise the stage number.
    pub fn index(self) -> usize {
        match self {
            Phase::Warmup => 0,
            Phase::Stage(i) => i,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Warmup => f.write_str("warmup"),
            Phase::Stage(i) => write!(f, "s{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseWindow {
    pub start: u64,
    pub end: u64,
    pub phase: Phase,
}

/// Warm-up, then stages `1..=K` of `stage_steps` each, cycling until
/// `total_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub k: usize,
    pub warmup_steps: u64,
    pub stage_steps: u64,
    pub total_steps: u64,
}

pub fn build_schedule(k: usize, warmup_steps: u64, stage_steps: u64, total_steps: u64) -> Result<Schedule> {
    if k == 0 {
        return Err(Error::InvalidParameter(String::from("K must be >= 1")));
    }
    if stage_steps == 0 {
        return Err(Error::InvalidParameter(String::from("stage steps must be >= 1")));
    }
    if total_steps < warmup_steps {
        return Err(Error::InvalidParameter(String::from("total steps must be >= warm-up steps")));
    }
    Ok(Schedule { k, warmup_steps, stage_steps, total_steps })
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            k: DEFAULT_STAGES,
            warmup_steps: DEFAULT_WARMUP_STEPS,
            stage_steps: DEFAULT_STAGE_STEPS,
            total_steps: DEFAULT_TOTAL_STEPS,
        }
    }
}

impl Schedule {
    /// `None` for steps at or beyond the total.
    pub fn phase_at(&self, step: u64) -> Option<Phase> {
        if step >= self.total_steps {
            return None;
        }
        if step < self.warmup_steps {
            return Some(Phase::Warmup);
        }
        let slot = (step - self.warmup_steps) / self.stage_steps;
        Some(Phase::Stage((slot % self.k as u64) as usize + 1))
    }

    pub fn windows(&self) -> Vec<PhaseWindow> {
        let mut out = Vec::new();
        if self.warmup_steps > 0 {
            out.push(PhaseWindow { start: 0, end: self.warmup_steps, phase: Phase::Warmup });
        }
        let mut start = self.warmup_steps;
        let mut slot = 0usize;
        while start < self.total_steps {
            let end = (start + self.stage_steps).min(self.total_steps);
            out.push(PhaseWindow { start, end, phase: Phase::Stage(slot % self.k + 1) });
            start = end;
            slot += 1;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarmupMode {
    /// Uniform random token masking.
    Random,
    /// Entity masking restricted to `G_1`.
    G1,
}

impl FromStr for WarmupMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(WarmupMode::Random),
            "g1" => Ok(WarmupMode::G1),
            _ => Err(Error::InvalidParameter(alloc::format!("unknown warm-up mode {s:?}"))),
        }
    }
}

impl fmt::Display for WarmupMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WarmupMode::Random => "random",
            WarmupMode::G1 => "g1",
        })
    }
}

/// Linear mask-ratio ramp over the whole run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRamp {
    pub start: f64,
    pub end: f64,
    pub total_steps: u64,
}

impl RatioRamp {
    pub fn ratio_at(&self, step: u64) -> f64 {
        let t = (step as f64 / self.total_steps.max(1) as f64).clamp(0.0, 1.0);
        self.start + (self.end - self.start) * t
    }
}

#[derive(Debug, Clone, Default)]
pub struct CurriculumInputs<'a> {
    pub degrees: Option<&'a BTreeMap<String, u64>>,
    pub frequencies: Option<&'a BTreeMap<String, u64>>,
}

fn all_entities(inputs: &CurriculumInputs<'_>) -> Result<Vec<String>> {
    let map = inputs.degrees.or(inputs.frequencies).ok_or(Error::MissingInput("entity set"))?;
    Ok(map.keys().cloned().collect())
}

/// Strata for any strategy. Strategies without a difficulty order
/// (`MaskingRatio`, `None`) return one stratum holding every entity.
pub fn alternative_strata(
    strategy: Strategy,
    inputs: &CurriculumInputs<'_>,
    k: usize,
) -> Result<Vec<Vec<String>>> {
    let degrees = || inputs.degrees.ok_or(Error::MissingInput("node degrees"));
    let freqs = || inputs.frequencies.ok_or(Error::MissingInput("corpus frequencies"));
    match strategy {
        Strategy::NodeDegree => stratify_by_degree(degrees()?, k),
        Strategy::Reverse => {
            let mut s = stratify_by_degree(degrees()?, k)?;
            s.reverse();
            Ok(s)
        }
        Strategy::Frequency => stratify_by_frequency(freqs()?, k),
        Strategy::Concept => stratify_by_concept(degrees()?, freqs()?, k),
        Strategy::MaskingRatio | Strategy::None => {
            let mut all = all_entities(inputs)?;
            all.sort();
            split_ranked(all, 1)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumPlan {
    pub strategy: Strategy,
    pub k: usize,
    pub strata: Vec<Vec<String>>,
    pub cumulative: Vec<BTreeSet<String>>,
    pub schedule: Schedule,
    pub warmup_mode: WarmupMode,
    pub ratio_ramp: Option<RatioRamp>,
    /// Set when the strategy is a concretization of a loosely described
    /// baseline.
    pub interpretation: Option<String>,
}

impl CurriculumPlan {
    pub fn new(
        strategy: Strategy,
        inputs: &CurriculumInputs<'_>,
        k: usize,
        schedule: Schedule,
        warmup_mode: WarmupMode,
    ) -> Result<CurriculumPlan> {
        let strata = alternative_strata(strategy, inputs, k)?;
        let k = strata.len();
        let schedule = Schedule { k, ..schedule };
        let ratio_ramp = (strategy == Strategy::MaskingRatio).then_some(RatioRamp {
            start: RAMP_START_RATIO,
            end: RAMP_END_RATIO,
            total_steps: schedule.total_steps,
        });
        let interpretation = (strategy == Strategy::Concept).then(|| {
            String::from("difficulty = frequency rank + node-degree rank, ascending")
        });
        Ok(CurriculumPlan {
            strategy,
            k,
            cumulative: cumulative_sets(&strata),
            strata,
            schedule,
            warmup_mode,
            ratio_ramp,
            interpretation,
        })
    }

    /// Every entity in the plan.
    pub fn universe(&self) -> &BTreeSet<String> {
        self.cumulative.last().expect("plan has at least one stage")
    }

    /// 1-based stage in which `entity` first becomes eligible.
    pub fn stage_of(&self, entity: &str) -> Option<usize> {
        self.strata.iter().position(|s| s.iter().any(|e| e == entity)).map(|i| i + 1)
    }

    /// Entity -> first stage, for every entity.
    pub fn stage_map(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for (i, s) in self.strata.iter().enumerate() {
            for e in s {
                m.entry(e.clone()).or_insert(i + 1);
            }
        }
        m
    }
}
