//! One active-learning round: translate every eligible problem, check and
//! judge each sample, journal the verdicts, then write the manifest.
//!
//! Workers process problems concurrently; a single writer owns the store.
//! Samples already in the journal are skipped, so an interrupted round is
//! resumed by running it again.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use forge_core::store::{LabelRecord, RawTranslation, Store, StoreReader};
use forge_core::{compute_round_stats, HumanVerdict, Problem, RoundManifest, TranslationCandidate, TriState};
use forge_lean::NamePolicy;

use crate::config::RoundConfig;
use crate::error::PipelineError;
use crate::fault::{FaultInjector, Stage};
use crate::filter::{rephrase_answer, TagAllowlist};
use crate::funnel::{FunnelReport, StageFailure};
use crate::stages::{fingerprint_of, Stages, StepError};

/// Not judged ill-defined, or not judged at all.
pub fn is_well_defined(p: &Problem) -> bool {
    matches!(p.well_defined, TriState::Positive | TriState::Unjudged)
}

pub fn eligible(p: &Problem, allowlist: &TagAllowlist) -> bool {
    is_well_defined(p) && allowlist.allows(p)
}

#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub manifest: RoundManifest,
    pub funnel: FunnelReport,
}

impl RoundOutcome {
    pub fn is_partial(&self) -> bool {
        !self.funnel.failures.is_empty()
    }
}

#[derive(Debug, Default)]
struct ProblemOutcome {
    raws: Vec<RawTranslation>,
    candidates: Vec<TranslationCandidate>,
    failures: Vec<StageFailure>,
}

fn failure(problem_id: &str, sample_index: Option<u32>, stage: Stage, error: &PipelineError) -> StageFailure {
    let retryable = match error {
        PipelineError::Llm(e) => e.is_retryable(),
        PipelineError::Repl(_) => true,
        _ => false,
    };
    StageFailure { problem_id: problem_id.to_string(), sample_index, stage, retryable, message: error.to_string() }
}

struct Job<'a> {
    problem: Problem,
    done: HashSet<u32>,
    raws: HashMap<u32, &'a RawTranslation>,
}

fn process(
    stages: &Stages,
    cfg: &RoundConfig,
    faults: &FaultInjector,
    job: &Job,
) -> Result<ProblemOutcome, PipelineError> {
    let p = &job.problem;
    let n = cfg.sampling.n_samples;
    let pending: Vec<u32> = (0..n).filter(|i| !job.done.contains(i)).collect();
    let mut out = ProblemOutcome::default();
    if pending.is_empty() {
        return Ok(out);
    }

    let mut texts: HashMap<u32, (String, String)> =
        job.raws.iter().map(|(i, r)| (*i, (r.raw_text.clone(), r.normalized_text.clone()))).collect();
    if pending.iter().any(|i| !texts.contains_key(i)) {
        faults.check(Stage::Translate)?;
        match stages.gateways.translate.translate(&p.id, &p.nl_text, n, cfg.sampling.temperature) {
            Ok(samples) => {
                for (i, raw) in (0..n).zip(samples) {
                    if texts.contains_key(&i) {
                        continue;
                    }
                    let policy = NamePolicy::PerSample { problem_id: p.id.clone(), sample_index: i };
                    let normalized = Stages::normalize(&raw, &policy);
                    out.raws.push(RawTranslation {
                        problem_id: p.id.clone(),
                        round: cfg.round,
                        sample_index: i,
                        raw_text: raw.clone(),
                        normalized_text: normalized.clone(),
                    });
                    texts.insert(i, (raw, normalized));
                }
            }
            Err(e) => {
                out.failures.push(failure(&p.id, None, Stage::Translate, &e.into()));
                return Ok(out);
            }
        }
    }

    for i in pending {
        let normalized = &texts[&i].1;
        faults.check(Stage::Lint)?;
        let (text, lint) = stages.lint_and_fix(normalized, &p.nl_text);
        let mut candidate = TranslationCandidate {
            problem_id: p.id.clone(),
            round: cfg.round,
            sample_index: i,
            fingerprint: fingerprint_of(&text),
            statement_text: text,
            lint,
            compile: None,
            back_translation: None,
            nli: TriState::Unjudged,
            human: HumanVerdict::Unreviewed,
            modified_text: None,
        };
        let cid = candidate.id();
        match stages.verify(&candidate.statement_text, &p.nl_text, &[&cid, &p.id], faults) {
            Ok(v) => {
                candidate.compile = Some(v.compile);
                candidate.back_translation = v.back_translation;
                candidate.nli = v.nli;
                out.candidates.push(candidate);
            }
            Err(StepError::Abort(e)) => return Err(e),
            Err(StepError::Failed { stage, error }) => out.failures.push(failure(&p.id, Some(i), stage, &error)),
        }
    }
    Ok(out)
}

/// Runs (or resumes) the round described by `cfg`.
pub fn run_round(
    store: &mut Store,
    stages: &Stages,
    cfg: &RoundConfig,
    faults: &FaultInjector,
) -> Result<RoundOutcome, PipelineError> {
    cfg.validate()?;
    store.touch_round(cfg.round)?;
    let reader = store.reader().clone();
    let mut problems: Vec<Problem> =
        reader.load_problems()?.into_iter().filter(|p| eligible(p, &cfg.allowlist)).collect();
    problems.sort_by(|a, b| a.id.cmp(&b.id));

    let done = reader.load_round(cfg.round)?;
    let raws = reader.load_raw(cfg.round)?;
    let mut done_by_problem: HashMap<&str, HashSet<u32>> = HashMap::new();
    for c in &done {
        done_by_problem.entry(&c.problem_id).or_default().insert(c.sample_index);
    }
    let mut raws_by_problem: HashMap<&str, HashMap<u32, &RawTranslation>> = HashMap::new();
    for r in &raws {
        raws_by_problem.entry(&r.problem_id).or_default().insert(r.sample_index, r);
    }
    let jobs: Vec<Job> = problems
        .into_iter()
        .filter_map(|p| {
            let done = done_by_problem.get(p.id.as_str()).cloned().unwrap_or_default();
            if done.len() as u64 >= u64::from(cfg.sampling.n_samples) {
                return None;
            }
            let raws = raws_by_problem.get(p.id.as_str()).cloned().unwrap_or_default();
            Some(Job { problem: rephrase_answer(p), done, raws })
        })
        .collect();
    log::info!("round {}: {} problems to process ({} samples already journaled)", cfg.round, jobs.len(), done.len());

    let mut failures = Vec::new();
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let workers = cfg.parallelism.min(jobs.len());
    let mut aborted: Option<PipelineError> = None;
    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<Result<ProblemOutcome, PipelineError>>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (jobs, next, stop) = (&jobs, &next, &stop);
            scope.spawn(move || loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = jobs.get(i) else { break };
                if tx.send(process(stages, cfg, faults, job)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for result in rx {
            if aborted.is_some() {
                continue;
            }
            let written = result.and_then(|outcome| {
                for raw in &outcome.raws {
                    store.append_raw(raw)?;
                }
                for c in &outcome.candidates {
                    faults.check(Stage::Journal)?;
                    store.append_candidate(c)?;
                }
                failures.extend(outcome.failures);
                Ok(())
            });
            if let Err(e) = written {
                stop.store(true, Ordering::SeqCst);
                aborted = Some(e);
            }
        }
    });
    if let Some(e) = aborted {
        return Err(e);
    }
    failures.sort_by(|a, b| (&a.problem_id, a.sample_index).cmp(&(&b.problem_id, b.sample_index)));
    finish_round(store, cfg, &cfg.digest(stages.prompts()), failures)
}

/// Latest label per candidate, in journal order.
pub fn latest_labels(labels: Vec<LabelRecord>) -> BTreeMap<String, LabelRecord> {
    labels.into_iter().map(|l| (l.candidate_id.clone(), l)).collect()
}

pub fn accepted_labels(reader: &StoreReader, round: u32) -> Result<u64, PipelineError> {
    Ok(latest_labels(reader.load_labels(round)?).values().filter(|l| l.verdict.is_accepted()).count() as u64)
}

/// Manifest and funnel from what the store holds for the round.
pub fn round_summary(
    reader: &StoreReader,
    cfg: &RoundConfig,
    config_digest: &str,
    failures: Vec<StageFailure>,
) -> Result<RoundOutcome, PipelineError> {
    let problems = reader.load_problems()?;
    let index: HashMap<&str, &Problem> = problems.iter().map(|p| (p.id.as_str(), p)).collect();
    let candidates = reader.load_round(cfg.round)?;
    let stats = compute_round_stats(&candidates, |id| index.get(id).map(|p| p.tags.clone()).unwrap_or_default())?;
    let mut manifest = stats.into_manifest(&cfg.model_id, config_digest, cfg.seed);
    // an empty round has no candidates to take the number from
    manifest.round = cfg.round;
    manifest.human_labels_added = accepted_labels(reader, cfg.round)?;

    let mut fixes_applied = BTreeMap::new();
    if cfg.lint.apply_fixes {
        let linter = match &cfg.lint.rules {
            Some(ids) => forge_lean::Linter::new(forge_lean::RuleRegistry::builtin().only(ids)?),
            None => forge_lean::Linter::default(),
        };
        for raw in reader.load_raw(cfg.round)? {
            let nl = index.get(raw.problem_id.as_str()).map(|p| rephrase_answer((*p).clone()).nl_text);
            for f in linter.lint(&raw.normalized_text, nl.as_deref()).fixable() {
                *fixes_applied.entry(f.rule_id.clone()).or_insert(0) += 1;
            }
        }
    }
    let mut train_labels = 0;
    for r in reader.rounds()?.into_iter().filter(|r| *r < cfg.round) {
        train_labels += accepted_labels(reader, r)?;
    }
    let funnel = FunnelReport {
        round: cfg.round,
        model_id: cfg.model_id.clone(),
        train_labels,
        extracted: problems.len() as u64,
        well_defined: problems.iter().filter(|p| is_well_defined(p)).count() as u64,
        tag_kept: problems.iter().filter(|p| eligible(p, &cfg.allowlist)).count() as u64,
        translated: manifest.translated_count,
        cpn: manifest.cpn,
        npn: manifest.npn,
        fixes_applied,
        failures,
    };
    Ok(RoundOutcome { manifest, funnel })
}

fn finish_round(
    store: &mut Store,
    cfg: &RoundConfig,
    config_digest: &str,
    failures: Vec<StageFailure>,
) -> Result<RoundOutcome, PipelineError> {
    let outcome = round_summary(store.reader(), cfg, config_digest, failures)?;
    store.write_manifest(&outcome.manifest)?;
    store.write_json(cfg.round, "funnel.json", &outcome.funnel)?;
    store.write_json(cfg.round, "config.json", cfg)?;
    Ok(outcome)
}
