//! Training-pair and dataset exports.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::types::{HumanVerdict, Problem, TranslationCandidate};

pub const NL_TO_FORMAL: &str = "nl2fl";
pub const FORMAL_TO_NL: &str = "fl2nl";
pub const SORRY_TERMINATOR: &str = ":= by sorry";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub prompt_id: String,
    pub input: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportMeta {
    pub format: String,
    pub records: usize,
    pub candidates: usize,
}

/// Two records per accepted candidate, one per translation direction.
/// Every candidate must carry a `correct` or `modified` human verdict.
pub fn export_training_pairs(
    accepted: &[TranslationCandidate],
    problems: &HashMap<String, Problem>,
) -> Result<Vec<TrainingPair>> {
    let not_accepted: Vec<String> = accepted.iter().filter(|c| !c.human.is_accepted()).map(|c| c.id()).collect();
    if !not_accepted.is_empty() {
        return Err(CoreError::Unreviewed(not_accepted));
    }
    let mut pairs = Vec::with_capacity(accepted.len() * 2);
    for c in accepted {
        let problem = problems
            .get(&c.problem_id)
            .ok_or_else(|| CoreError::validation(format!("candidate {}: unknown problem {}", c.id(), c.problem_id)))?;
        let statement = c.accepted_text().trim_end();
        if !statement.ends_with(SORRY_TERMINATOR) {
            return Err(CoreError::validation(format!(
                "candidate {}: statement does not end with {SORRY_TERMINATOR:?}",
                c.id()
            )));
        }
        pairs.push(TrainingPair {
            prompt_id: NL_TO_FORMAL.into(),
            input: problem.nl_text.clone(),
            target: statement.to_string(),
        });
        pairs.push(TrainingPair {
            prompt_id: FORMAL_TO_NL.into(),
            input: statement.to_string(),
            target: problem.nl_text.clone(),
        });
    }
    Ok(pairs)
}

/// Writes records as JSON lines and a `<path>.meta.json` sidecar describing
/// them. An empty slice yields a zero-length data file.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T], meta: &ExportMeta) -> Result<()> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| CoreError::io(path, e))?;
    file.write_all(&buf).map_err(|e| CoreError::io(path, e))?;
    let meta_path = path.with_extension("meta.json");
    std::fs::write(&meta_path, serde_json::to_vec_pretty(meta)?).map_err(|e| CoreError::io(meta_path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub nl_text: String,
    pub answer: Option<String>,
    pub tags: Vec<String>,
    pub formal_statement: String,
    pub fingerprint: String,
    pub round: u32,
    pub human: HumanVerdict,
}

/// Dataset rows: NLI-passing or human-accepted candidates that a human has
/// not rejected, first occurrence per fingerprint.
pub fn dataset_records(candidates: &[TranslationCandidate], problems: &HashMap<String, Problem>) -> Vec<DatasetRecord> {
    let mut seen = HashSet::new();
    candidates
        .iter()
        .filter(|c| c.human != HumanVerdict::Rejected)
        .filter(|c| c.nli_passed() || c.human.is_accepted())
        .filter(|c| seen.insert(c.fingerprint.clone()))
        .filter_map(|c| {
            let p = problems.get(&c.problem_id)?;
            Some(DatasetRecord {
                id: c.id(),
                nl_text: p.nl_text.clone(),
                answer: p.answer.clone(),
                tags: p.tags.clone(),
                formal_statement: c.accepted_text().to_string(),
                fingerprint: c.fingerprint.clone(),
                round: c.round,
                human: c.human,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{LintReport, TriState};

    fn problem() -> HashMap<String, Problem> {
        let p = Problem {
            id: "p1".into(),
            source: "post".into(),
            nl_text: "Prove that 1 + 1 = 2.".into(),
            answer: None,
            tags: vec!["algebra".into()],
            well_defined: TriState::Positive,
        };
        HashMap::from([(p.id.clone(), p)])
    }

    fn cand(human: HumanVerdict, modified: Option<&str>) -> TranslationCandidate {
        TranslationCandidate {
            problem_id: "p1".into(),
            round: 1,
            sample_index: 0,
            statement_text: "theorem t : 1 + 1 = 2 := by sorry".into(),
            lint: LintReport::default(),
            compile: None,
            back_translation: None,
            nli: TriState::Unjudged,
            human,
            modified_text: modified.map(String::from),
            fingerprint: "fp".into(),
        }
    }

    #[test]
    fn one_pair_two_directions() {
        let pairs = export_training_pairs(&[cand(HumanVerdict::Correct, None)], &problem()).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].prompt_id, NL_TO_FORMAL);
        assert_eq!(pairs[1].prompt_id, FORMAL_TO_NL);
        assert_eq!(pairs[0].input, pairs[1].target);
        assert_eq!(pairs[0].target, pairs[1].input);
        assert!(pairs[0].target.ends_with(":= by sorry"));
    }

    #[test]
    fn modified_uses_edit() {
        let edit = "theorem t : (1:ℕ) + 1 = 2 := by sorry";
        let pairs = export_training_pairs(&[cand(HumanVerdict::Modified, Some(edit))], &problem()).unwrap();
        assert_eq!(pairs[0].target, edit);
        assert_eq!(pairs[1].input, edit);
    }

    #[test]
    fn unreviewed_rejected_with_ids() {
        let err = export_training_pairs(
            &[cand(HumanVerdict::Correct, None), cand(HumanVerdict::Unreviewed, None)],
            &problem(),
        )
        .unwrap_err();
        match err {
            CoreError::Unreviewed(ids) => assert_eq!(ids, vec!["p1:1:0".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_export_writes_empty_file_and_meta() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("training_pairs.jsonl");
        let pairs = export_training_pairs(&[], &problem()).unwrap();
        let meta = ExportMeta { format: "training_pairs/v1".into(), records: 0, candidates: 0 };
        write_jsonl(&path, &pairs, &meta).unwrap();
        assert_eq!(std::fs::read(&path).unwrap().len(), 0);
        let meta_back: ExportMeta =
            serde_json::from_slice(&std::fs::read(dir.path().join("training_pairs.meta.json")).unwrap()).unwrap();
        assert_eq!(meta_back, meta);
    }

    #[test]
    fn keys_are_exact() {
        let pairs = export_training_pairs(&[cand(HumanVerdict::Correct, None)], &problem()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&pairs[0]).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, vec!["input", "prompt_id", "target"]);
    }
}
