//! Choosing which candidates go to human reviewers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use forge_core::store::StoreReader;
use forge_core::{HumanVerdict, TranslationCandidate};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

/// Tags need more than this many NLI-passing candidates to be sampled.
pub const MIN_TAG_COUNT: u64 = 100;
pub const TOP_TAGS: usize = 3;
pub const TOP_QUOTA: u32 = 10;
pub const OTHER_QUOTA: u32 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewBatch {
    pub round: u32,
    pub strategy: String,
    /// Candidate ids, in review order.
    pub items: Vec<String>,
    pub quota_map: BTreeMap<String, u32>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

pub struct ReviewInput<'a> {
    pub round: u32,
    pub candidates: &'a [TranslationCandidate],
    pub tags: &'a HashMap<String, Vec<String>>,
    pub seed: u64,
}

impl ReviewInput<'_> {
    fn tags_of(&self, c: &TranslationCandidate) -> &[String] {
        self.tags.get(&c.problem_id).map(Vec::as_slice).unwrap_or(&[])
    }
}

pub trait ReviewStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn select(&self, input: &ReviewInput) -> ReviewBatch;
}

/// Samples the model got wrong: compile failures first, then statements
/// that compiled but whose NLI check did not come back positive.
#[derive(Debug, Default)]
pub struct PatternTriage;

impl ReviewStrategy for PatternTriage {
    fn name(&self) -> &'static str {
        "pattern_triage"
    }

    fn select(&self, input: &ReviewInput) -> ReviewBatch {
        let mut pending: Vec<&TranslationCandidate> =
            input.candidates.iter().filter(|c| c.human == HumanVerdict::Unreviewed && !c.nli_passed()).collect();
        pending.sort_by_key(|c| (c.compiled(), c.key()));
        ReviewBatch {
            round: input.round,
            strategy: self.name().into(),
            items: pending.iter().map(|c| c.id()).collect(),
            quota_map: BTreeMap::new(),
            seed: input.seed,
            warning: None,
        }
    }
}

/// Per-tag quotas: the most frequent tags get more samples, rare tags none.
pub fn quota_map(counts: &BTreeMap<String, u64>) -> BTreeMap<String, u32> {
    let mut common: Vec<(&String, u64)> =
        counts.iter().filter(|(_, n)| **n > MIN_TAG_COUNT).map(|(t, n)| (t, *n)).collect();
    common.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    common
        .into_iter()
        .enumerate()
        .map(|(rank, (tag, _))| (tag.clone(), if rank < TOP_TAGS { TOP_QUOTA } else { OTHER_QUOTA }))
        .collect()
}

/// Random NLI-passing samples per common tag, for accuracy estimates.
#[derive(Debug, Default)]
pub struct TagStratified;

impl ReviewStrategy for TagStratified {
    fn name(&self) -> &'static str {
        "tag_stratified"
    }

    fn select(&self, input: &ReviewInput) -> ReviewBatch {
        let passing: Vec<&TranslationCandidate> = input.candidates.iter().filter(|c| c.nli_passed()).collect();
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for c in &passing {
            for t in input.tags_of(c).iter().collect::<BTreeSet<_>>() {
                *counts.entry(t.clone()).or_default() += 1;
            }
        }
        let quotas = quota_map(&counts);
        let mut batch = ReviewBatch {
            round: input.round,
            strategy: self.name().into(),
            items: Vec::new(),
            quota_map: quotas.clone(),
            seed: input.seed,
            warning: None,
        };
        if quotas.is_empty() {
            batch.warning = Some(format!("no tag has more than {MIN_TAG_COUNT} NLI-passing candidates"));
            return batch;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(input.seed);
        let mut taken = BTreeSet::new();
        for (tag, quota) in &quotas {
            let mut pool: Vec<String> = passing
                .iter()
                .filter(|c| input.tags_of(c).contains(tag))
                .map(|c| c.id())
                .filter(|id| !taken.contains(id))
                .collect();
            pool.sort();
            pool.shuffle(&mut rng);
            for id in pool.into_iter().take(*quota as usize) {
                taken.insert(id.clone());
                batch.items.push(id);
            }
        }
        batch
    }
}

#[derive(Clone)]
pub struct ReviewRegistry {
    strategies: BTreeMap<&'static str, Arc<dyn ReviewStrategy>>,
}

impl Default for ReviewRegistry {
    fn default() -> Self {
        let mut r = ReviewRegistry { strategies: BTreeMap::new() };
        r.register(Arc::new(PatternTriage));
        r.register(Arc::new(TagStratified));
        r
    }
}

impl ReviewRegistry {
    pub fn register(&mut self, strategy: Arc<dyn ReviewStrategy>) {
        self.strategies.insert(strategy.name(), strategy);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ReviewStrategy>, PipelineError> {
        self.strategies.get(name).cloned().ok_or_else(|| PipelineError::UnknownStrategy(name.to_string()))
    }
}

/// Builds a batch from the journaled candidates of `round`.
pub fn enqueue_review(
    reader: &StoreReader,
    round: u32,
    strategy: &dyn ReviewStrategy,
    seed: u64,
) -> Result<ReviewBatch, PipelineError> {
    if !reader.has_round(round) {
        return Err(forge_core::CoreError::UnknownRound(round).into());
    }
    let candidates = reader.load_round(round)?;
    let tags: HashMap<String, Vec<String>> = reader.load_problems()?.into_iter().map(|p| (p.id, p.tags)).collect();
    Ok(strategy.select(&ReviewInput { round, candidates: &candidates, tags: &tags, seed }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotas_follow_frequency_rank() {
        let counts: BTreeMap<String, u64> = [("a", 500), ("b", 101), ("c", 300), ("d", 100), ("e", 200), ("f", 150)]
            .map(|(t, n)| (t.to_string(), n))
            .into();
        let q = quota_map(&counts);
        assert_eq!(q.len(), 5);
        assert_eq!((q["a"], q["c"], q["e"]), (10, 10, 10));
        assert_eq!((q["f"], q["b"]), (5, 5));
        assert!(!q.contains_key("d"));
        assert!(quota_map(&BTreeMap::new()).is_empty());
    }

    #[test]
    fn registry_lookup() {
        let r = ReviewRegistry::default();
        assert_eq!(r.names(), vec!["pattern_triage", "tag_stratified"]);
        assert!(matches!(r.get("nope"), Err(PipelineError::UnknownStrategy(_))));
    }
}
