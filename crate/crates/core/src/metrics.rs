//! Round bookkeeping: compile/NLI pass numbers, per-tag weighted accuracy
//! and pass@k. All functions here are pure.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::types::{CompileKind, RoundManifest, TranslationCandidate, TriState};

/// Counts for one round, before model/config identifiers are attached.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: u32,
    pub translated_count: u64,
    pub cpn: u64,
    pub npn: u64,
    pub per_tag_counts: BTreeMap<String, u64>,
}

impl RoundStats {
    pub fn into_manifest(self, model_id: &str, config_digest: &str, seed: u64) -> RoundManifest {
        RoundManifest {
            round: self.round,
            model_id: model_id.to_string(),
            translated_count: self.translated_count,
            cpn: self.cpn,
            npn: self.npn,
            per_tag_counts: self.per_tag_counts,
            human_labels_added: 0,
            config_digest: config_digest.to_string(),
            seed,
        }
    }
}

/// Streaming form of [`compute_round_stats`]; each observation may carry a
/// multiplicity so compact verdict tables and candidate lists share one path.
#[derive(Debug, Default)]
pub struct StatsAccumulator {
    round: Option<u32>,
    stats: RoundStats,
}

impl StatsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(
        &mut self,
        round: u32,
        compile: Option<CompileKind>,
        nli: TriState,
        tags: &[String],
        multiplicity: u64,
    ) -> Result<()> {
        match self.round {
            Some(r) if r != round => {
                return Err(CoreError::validation(format!(
                    "candidates from rounds {r} and {round} mixed in one stats computation"
                )))
            }
            _ => self.round = Some(round),
        }
        self.stats.translated_count += multiplicity;
        let compiled = compile.is_some_and(CompileKind::is_pass);
        if compiled {
            self.stats.cpn += multiplicity;
            if nli.is_positive() {
                self.stats.npn += multiplicity;
                let unique: BTreeSet<&String> = tags.iter().collect();
                for tag in unique {
                    *self.stats.per_tag_counts.entry(tag.clone()).or_default() += multiplicity;
                }
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> RoundStats {
        self.stats.round = self.round.unwrap_or(0);
        self.stats
    }
}

/// Computes CPN, NPN and per-tag counts. `tags_of` maps a problem id to its
/// tags; unknown problems contribute no tag counts.
pub fn compute_round_stats<'a, I, F>(candidates: I, tags_of: F) -> Result<RoundStats>
where
    I: IntoIterator<Item = &'a TranslationCandidate>,
    F: Fn(&str) -> Vec<String>,
{
    let mut acc = StatsAccumulator::new();
    for c in candidates {
        let tags = tags_of(&c.problem_id);
        acc.add(c.round, c.compile.as_ref().map(|v| v.kind), c.nli, &tags, 1)?;
    }
    Ok(acc.finish())
}

/// One line of a compact verdict table: `count` candidates sharing a verdict
/// chain and tag set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub compile: Option<CompileKind>,
    pub nli: TriState,
    #[serde(default)]
    pub tags: Vec<String>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictTable {
    pub round: u32,
    pub rows: Vec<VerdictRow>,
}

impl VerdictTable {
    pub fn stats(&self) -> Result<RoundStats> {
        let mut acc = StatsAccumulator::new();
        for row in &self.rows {
            acc.add(self.round, row.compile, row.nli, &row.tags, row.count)?;
        }
        let mut stats = acc.finish();
        stats.round = self.round;
        Ok(stats)
    }
}

/// One tag line of a sampled-accuracy table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub tag: String,
    pub count: u64,
    pub sampled_correct: u64,
    pub sampled_total: u64,
}

/// Count-weighted mean of per-row sampled accuracy, computed exactly.
pub fn weighted_accuracy_exact(rows: &[AccuracyRow]) -> Result<Ratio<u128>> {
    if rows.is_empty() {
        return Err(CoreError::validation("weighted accuracy over zero rows"));
    }
    let mut weighted = Ratio::from_integer(0u128);
    let mut total_count = 0u128;
    for row in rows {
        if row.sampled_total == 0 {
            return Err(CoreError::validation(format!("tag {}: sampled_total is 0", row.tag)));
        }
        if row.sampled_correct > row.sampled_total {
            return Err(CoreError::validation(format!(
                "tag {}: {} correct out of {} sampled",
                row.tag, row.sampled_correct, row.sampled_total
            )));
        }
        weighted += Ratio::new(row.count as u128 * row.sampled_correct as u128, row.sampled_total as u128);
        total_count += row.count as u128;
    }
    if total_count == 0 {
        return Err(CoreError::validation("weighted accuracy with zero total count"));
    }
    Ok(weighted / total_count)
}

pub fn weighted_accuracy(rows: &[AccuracyRow]) -> Result<f64> {
    weighted_accuracy_exact(rows).map(|r| ratio_to_f64(&r))
}

fn ratio_to_f64(r: &Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassAtK {
    pub solved: u64,
    pub total: u64,
    pub k: u32,
    pub rate: f64,
}

impl PassAtK {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.solved, self.total)
    }

    pub fn display(&self) -> String {
        format_percent(self.solved, self.total)
    }
}

pub fn pass_rate(solved: u64, total: u64, k: u32) -> Result<PassAtK> {
    if total == 0 {
        return Err(CoreError::validation("pass rate over zero statements"));
    }
    if solved > total {
        return Err(CoreError::validation(format!("solved {solved} exceeds total {total}")));
    }
    Ok(PassAtK { solved, total, k, rate: solved as f64 / total as f64 })
}

/// `num/den` as a percentage with one decimal, rounded half-up in exact
/// integer arithmetic: `format_percent(4898, 57231) == "8.6%"`.
pub fn format_percent(num: u64, den: u64) -> String {
    assert!(den > 0, "format_percent with zero denominator");
    let (num, den) = (num as u128, den as u128);
    let tenths = (2 * num * 1000 + den) / (2 * den);
    format!("{}.{}%", tenths / 10, tenths % 10)
}
