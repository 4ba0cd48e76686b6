//! Curriculum plans and their JSON form.

use std::collections::BTreeMap;
use std::path::Path;

use melt_core::chem::SeedEntitySet;
use melt_core::curriculum::{
    cumulative_sets, CurriculumInputs, CurriculumPlan, RatioRamp, Schedule, Strategy, WarmupMode,
};
use melt_core::vocab::{canonical_word, VocabEntry};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PLAN_FILE: &str = "plan.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub warmup_steps: u64,
    pub stage_steps: u64,
    pub total_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampFile {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumFile {
    pub stage: usize,
    pub size: usize,
    /// `|G_i|`.
    pub cumulative_size: usize,
    pub min_degree: Option<u64>,
    pub max_degree: Option<u64>,
    pub entities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowFile {
    pub start: u64,
    pub end: u64,
    pub phase: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub strategy: String,
    pub k: usize,
    pub warmup_mode: String,
    pub schedule: ScheduleFile,
    pub ratio_ramp: Option<RampFile>,
    pub interpretation: Option<String>,
    pub strata: Vec<StratumFile>,
    pub windows: Vec<WindowFile>,
}

impl PlanFile {
    pub fn from_plan(plan: &CurriculumPlan, degrees: Option<&BTreeMap<String, u64>>) -> PlanFile {
        let range = |s: &[String], f: fn(u64, u64) -> u64| {
            degrees.and_then(|d| s.iter().filter_map(|e| d.get(e).copied()).reduce(f))
        };
        PlanFile {
            strategy: plan.strategy.as_str().into(),
            k: plan.k,
            warmup_mode: plan.warmup_mode.to_string(),
            schedule: ScheduleFile {
                warmup_steps: plan.schedule.warmup_steps,
                stage_steps: plan.schedule.stage_steps,
                total_steps: plan.schedule.total_steps,
            },
            ratio_ramp: plan.ratio_ramp.map(|r| RampFile { start: r.start, end: r.end }),
            interpretation: plan.interpretation.clone(),
            strata: plan
                .strata
                .iter()
                .zip(&plan.cumulative)
                .enumerate()
                .map(|(i, (s, g))| StratumFile {
                    stage: i + 1,
                    size: s.len(),
                    cumulative_size: g.len(),
                    min_degree: range(s, u64::min),
                    max_degree: range(s, u64::max),
                    entities: s.clone(),
                })
                .collect(),
            windows: plan
                .schedule
                .windows()
                .into_iter()
                .map(|w| WindowFile { start: w.start, end: w.end, phase: w.phase.to_string() })
                .collect(),
        }
    }

    pub fn to_plan(&self) -> Result<CurriculumPlan> {
        let strategy: Strategy = self.strategy.parse()?;
        let warmup_mode: WarmupMode = self.warmup_mode.parse()?;
        let strata: Vec<Vec<String>> = self.strata.iter().map(|s| s.entities.clone()).collect();
        if strata.len() != self.k || strata.iter().any(Vec::is_empty) {
            return Err(Error::Validation(format!("plan declares K={} but has {} non-empty strata", self.k, strata.len())));
        }
        let schedule = melt_core::curriculum::build_schedule(
            self.k,
            self.schedule.warmup_steps,
            self.schedule.stage_steps,
            self.schedule.total_steps,
        )?;
        Ok(CurriculumPlan {
            strategy,
            k: self.k,
            cumulative: cumulative_sets(&strata),
            strata,
            schedule,
            warmup_mode,
            ratio_ramp: self.ratio_ramp.as_ref().map(|r| RatioRamp {
                start: r.start,
                end: r.end,
                total_steps: schedule.total_steps,
            }),
            interpretation: self.interpretation.clone(),
        })
    }
}

pub fn write_plan(dir: &Path, plan: &CurriculumPlan, degrees: Option<&BTreeMap<String, u64>>) -> Result<PlanFile> {
    let file = PlanFile::from_plan(plan, degrees);
    crate::write_json(&dir.join(PLAN_FILE), &file)?;
    Ok(file)
}

/// Accepts the plan directory or the plan file itself.
pub fn read_plan_file(path: &Path) -> Result<PlanFile> {
    let file = if path.is_dir() { path.join(PLAN_FILE) } else { path.to_path_buf() };
    crate::read_json(&file)
}

/// Corpus frequency of each graph node: the vocabulary count of its
/// canonical form, else its seed frequency, else zero.
pub fn node_frequencies(
    nodes: impl IntoIterator<Item = String>,
    vocab: Option<&[VocabEntry]>,
    seeds: Option<&SeedEntitySet>,
) -> BTreeMap<String, u64> {
    let counts: BTreeMap<&str, u64> =
        vocab.into_iter().flatten().map(|e| (e.word.as_str(), e.count)).collect();
    nodes
        .into_iter()
        .map(|n| {
            let f = counts
                .get(n.as_str())
                .or_else(|| counts.get(canonical_word(&n).as_ref()))
                .copied()
                .or_else(|| seeds.and_then(|s| s.get(&n)).map(|s| s.corpus_frequency))
                .unwrap_or(0);
            (n, f)
        })
        .collect()
}

pub fn build_plan(
    strategy: Strategy,
    degrees: &BTreeMap<String, u64>,
    frequencies: Option<&BTreeMap<String, u64>>,
    k: usize,
    schedule: Schedule,
    warmup_mode: WarmupMode,
) -> Result<CurriculumPlan> {
    let inputs = CurriculumInputs { degrees: Some(degrees), frequencies };
    Ok(CurriculumPlan::new(strategy, &inputs, k, schedule, warmup_mode)?)
}

/// Phase labels in replay order, e.g. `warmup, s1, s2, s3, s1, ...`.
pub fn phase_labels(schedule: &Schedule) -> Vec<String> {
    schedule.windows().iter().map(|w| w.phase.to_string()).collect()
}
