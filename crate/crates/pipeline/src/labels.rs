//! Human verdicts: validation, recompilation of edits, and merging into the
//! store.

use std::collections::HashMap;
use std::path::Path;

use forge_core::store::{LabelRecord, Store};
use forge_core::{CompileVerdict, HumanVerdict, TranslationCandidate};
use forge_repl::StatementChecker;
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;
use crate::round::accepted_labels;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictSubmission {
    pub candidate_id: String,
    pub verdict: HumanVerdict,
    #[serde(default)]
    pub modified_text: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rejection {
    UnknownCandidate,
    Invalid {
        message: String,
    },
    /// The edited statement does not elaborate.
    CompileFailed {
        verdict: CompileVerdict,
    },
    /// The checker could not be reached; the label may be resubmitted.
    CheckerUnavailable {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedLabel {
    pub candidate_id: String,
    pub reason: Rejection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MergeReport {
    pub round: u32,
    pub applied: u64,
    /// Newly accepted training samples.
    pub delta: u64,
    pub rejected: Vec<RejectedLabel>,
    /// Accepted labels in the round after the merge.
    pub human_labels_total: u64,
}

/// Shape checks that need no store access.
pub fn validate_submission(sub: &VerdictSubmission) -> Result<(), String> {
    if sub.candidate_id.trim().is_empty() {
        return Err("candidate_id is empty".into());
    }
    if sub.candidate_id.parse::<forge_core::CandidateKey>().is_err() {
        return Err(format!("malformed candidate_id {:?}", sub.candidate_id));
    }
    match (sub.verdict, &sub.modified_text) {
        (HumanVerdict::Unreviewed, _) => Err("verdict must be correct, modified or rejected".into()),
        (HumanVerdict::Modified, None) => Err("modified verdict needs modified_text".into()),
        (HumanVerdict::Modified, Some(t)) if t.trim().is_empty() => Err("modified_text is empty".into()),
        (HumanVerdict::Correct | HumanVerdict::Rejected, Some(_)) => {
            Err("modified_text is only allowed with a modified verdict".into())
        }
        _ => Ok(()),
    }
}

/// Turns a submission into a label, recompiling edited statements.
pub fn check_submission(
    candidate: Option<&TranslationCandidate>,
    checker: &dyn StatementChecker,
    sub: &VerdictSubmission,
) -> Result<LabelRecord, Rejection> {
    validate_submission(sub).map_err(|message| Rejection::Invalid { message })?;
    let candidate = candidate.ok_or(Rejection::UnknownCandidate)?;
    if let Some(text) = &sub.modified_text {
        if *text == candidate.statement_text {
            return Err(Rejection::Invalid { message: "modified_text equals the original statement".into() });
        }
        let verdict =
            checker.check_statement(text).map_err(|e| Rejection::CheckerUnavailable { message: e.to_string() })?;
        if !verdict.is_pass() {
            return Err(Rejection::CompileFailed { verdict });
        }
    }
    Ok(LabelRecord {
        candidate_id: sub.candidate_id.clone(),
        verdict: sub.verdict,
        modified_text: sub.modified_text.clone(),
        note: sub.note.clone(),
    })
}

/// Rewrites `human_labels_added` in the round manifest, if one exists.
pub fn refresh_manifest(store: &mut Store, round: u32) -> Result<u64, PipelineError> {
    let total = accepted_labels(store.reader(), round)?;
    if let Some(mut manifest) = store.reader().read_manifest(round)? {
        manifest.human_labels_added = total;
        store.write_manifest(&manifest)?;
    }
    Ok(total)
}

/// Applies every valid label; the rest are reported with their reasons.
pub fn merge_human_labels(
    store: &mut Store,
    checker: &dyn StatementChecker,
    round: u32,
    submissions: &[VerdictSubmission],
) -> Result<MergeReport, PipelineError> {
    if !store.reader().has_round(round) {
        return Err(forge_core::CoreError::UnknownRound(round).into());
    }
    let candidates: HashMap<String, TranslationCandidate> =
        store.load_round(round)?.into_iter().map(|c| (c.id(), c)).collect();
    let mut report = MergeReport { round, ..Default::default() };
    for sub in submissions {
        match check_submission(candidates.get(&sub.candidate_id), checker, sub) {
            Ok(label) => {
                store.append_label(round, &label)?;
                report.applied += 1;
                if label.verdict.is_accepted() {
                    report.delta += 1;
                }
            }
            Err(reason) => {
                log::warn!("label for {} rejected: {reason:?}", sub.candidate_id);
                report.rejected.push(RejectedLabel { candidate_id: sub.candidate_id.clone(), reason });
            }
        }
    }
    report.human_labels_total = refresh_manifest(store, round)?;
    Ok(report)
}

/// Reads submissions from a JSON array or JSONL file.
pub fn read_submissions(path: &Path) -> Result<Vec<VerdictSubmission>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let bad = |e: serde_json::Error| PipelineError::Config(format!("{}: {e}", path.display()));
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).map_err(bad);
    }
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| serde_json::from_str(l).map_err(bad)).collect()
}
