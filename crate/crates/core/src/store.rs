//! On-disk store layout.
//!
//! ```text
//! <root>/store.json                  format version
//! <root>/problems.jsonl              Problem records
//! <root>/rounds/<N>/candidates.jsonl TranslationCandidate journal
//! <root>/rounds/<N>/raw.jsonl        pre-fix translations
//! <root>/rounds/<N>/labels.jsonl     human label journal
//! <root>/rounds/<N>/manifest.json    RoundManifest
//! ```
//!
//! Human labels are kept in their own journal and overlaid on candidates at
//! load time, so the candidate journal is never rewritten.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, TryLockError};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::journal::{read_journal, JournalWriter, Keyed, Receipt};
use crate::types::{CandidateKey, HumanVerdict, Problem, RoundManifest, TranslationCandidate};

pub const STORE_FORMAT_VERSION: u32 = 1;

impl Keyed for Problem {
    fn journal_key(&self) -> Option<String> {
        Some(self.id.clone())
    }
}

impl Keyed for TranslationCandidate {
    fn journal_key(&self) -> Option<String> {
        Some(self.id())
    }
}

/// A translation as it came back from the model, before normalization and
/// lint fixes were applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTranslation {
    pub problem_id: String,
    pub round: u32,
    pub sample_index: u32,
    pub raw_text: String,
    pub normalized_text: String,
}

impl Keyed for RawTranslation {
    fn journal_key(&self) -> Option<String> {
        Some(
            CandidateKey { problem_id: self.problem_id.clone(), round: self.round, sample_index: self.sample_index }
                .to_string(),
        )
    }
}

/// A persisted human verdict. Later labels for the same candidate win.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub candidate_id: String,
    pub verdict: HumanVerdict,
    pub modified_text: Option<String>,
    pub note: Option<String>,
}

impl Keyed for LabelRecord {}

#[derive(Debug, Serialize, Deserialize)]
struct StoreMeta {
    format_version: u32,
}

struct RoundJournals {
    candidates: JournalWriter<TranslationCandidate>,
    raw: JournalWriter<RawTranslation>,
    labels: JournalWriter<LabelRecord>,
}

/// Read access to a store directory; cheap to create, never locks.
#[derive(Debug, Clone)]
pub struct StoreReader {
    root: PathBuf,
}

impl StoreReader {
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        check_meta(&root)?;
        Ok(StoreReader { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn round_dir(&self, round: u32) -> PathBuf {
        self.root.join("rounds").join(round.to_string())
    }

    pub fn load_problems(&self) -> Result<Vec<Problem>> {
        read_journal(self.root.join("problems.jsonl"))
    }

    pub fn problem_index(&self) -> Result<HashMap<String, Problem>> {
        Ok(self.load_problems()?.into_iter().map(|p| (p.id.clone(), p)).collect())
    }

    /// Candidates in append order with the latest human labels applied.
    pub fn load_round(&self, round: u32) -> Result<Vec<TranslationCandidate>> {
        let mut candidates: Vec<TranslationCandidate> = read_journal(self.round_dir(round).join("candidates.jsonl"))?;
        let labels = self.load_labels(round)?;
        apply_labels(&mut candidates, &labels);
        Ok(candidates)
    }

    pub fn load_raw(&self, round: u32) -> Result<Vec<RawTranslation>> {
        read_journal(self.round_dir(round).join("raw.jsonl"))
    }

    pub fn load_labels(&self, round: u32) -> Result<Vec<LabelRecord>> {
        read_journal(self.round_dir(round).join("labels.jsonl"))
    }

    pub fn read_manifest(&self, round: u32) -> Result<Option<RoundManifest>> {
        self.read_json(round, "manifest.json")
    }

    pub fn read_json<T: DeserializeOwned>(&self, round: u32, name: &str) -> Result<Option<T>> {
        let path = self.round_dir(round).join(name);
        match std::fs::read(&path) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(CoreError::io(path, e)),
        }
    }

    pub fn has_round(&self, round: u32) -> bool {
        self.round_dir(round).is_dir()
    }

    pub fn rounds(&self) -> Result<Vec<u32>> {
        let dir = self.root.join("rounds");
        let entries = match std::fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(CoreError::io(dir, e)),
        };
        let mut rounds: Vec<u32> = entries.filter_map(|e| e.ok()?.file_name().to_str()?.parse().ok()).collect();
        rounds.sort_unstable();
        Ok(rounds)
    }
}

fn check_meta(root: &Path) -> Result<()> {
    let path = root.join("store.json");
    let bytes = std::fs::read(&path).map_err(|e| CoreError::io(&path, e))?;
    let meta: StoreMeta = serde_json::from_slice(&bytes)?;
    if meta.format_version != STORE_FORMAT_VERSION {
        return Err(CoreError::VersionMismatch { found: meta.format_version, expected: STORE_FORMAT_VERSION });
    }
    Ok(())
}

pub fn apply_labels(candidates: &mut [TranslationCandidate], labels: &[LabelRecord]) {
    let mut latest: HashMap<&str, &LabelRecord> = HashMap::new();
    for l in labels {
        latest.insert(&l.candidate_id, l);
    }
    for c in candidates {
        if let Some(l) = latest.get(c.id().as_str()) {
            c.human = l.verdict;
            c.modified_text = if l.verdict == HumanVerdict::Modified { l.modified_text.clone() } else { None };
        }
    }
}

/// The single writer of a store. Holds an exclusive lock on
/// `<root>/.writer.lock` until dropped.
pub struct Store {
    reader: StoreReader,
    _lock: File,
    problems: Option<JournalWriter<Problem>>,
    rounds: BTreeMap<u32, RoundJournals>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("root", &self.reader.root).finish()
    }
}

impl Store {
    /// Opens a store for writing, initializing an empty directory.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        std::fs::create_dir_all(&root).map_err(|e| CoreError::io(&root, e))?;
        let meta_path = root.join("store.json");
        if !meta_path.exists() {
            let meta = serde_json::to_vec(&StoreMeta { format_version: STORE_FORMAT_VERSION })?;
            std::fs::write(&meta_path, meta).map_err(|e| CoreError::io(&meta_path, e))?;
        }
        let lock_path = root.join(".writer.lock");
        let lock = File::create(&lock_path).map_err(|e| CoreError::io(&lock_path, e))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(TryLockError::WouldBlock) => return Err(CoreError::Locked { path: root }),
            Err(TryLockError::Error(e)) => return Err(CoreError::io(lock_path, e)),
        }
        let reader = StoreReader::open(&root)?;
        Ok(Store { reader, _lock: lock, problems: None, rounds: BTreeMap::new() })
    }

    pub fn reader(&self) -> &StoreReader {
        &self.reader
    }

    pub fn root(&self) -> &Path {
        self.reader.root()
    }

    fn problems(&mut self) -> Result<&mut JournalWriter<Problem>> {
        if self.problems.is_none() {
            let (w, _) = JournalWriter::open(self.reader.root.join("problems.jsonl"))?;
            self.problems = Some(w);
        }
        Ok(self.problems.as_mut().expect("just opened"))
    }

    fn round(&mut self, round: u32) -> Result<&mut RoundJournals> {
        if !self.rounds.contains_key(&round) {
            let dir = self.reader.round_dir(round);
            let (candidates, _) = JournalWriter::open(dir.join("candidates.jsonl"))?;
            let (raw, _) = JournalWriter::open(dir.join("raw.jsonl"))?;
            let (labels, _) = JournalWriter::open(dir.join("labels.jsonl"))?;
            self.rounds.insert(round, RoundJournals { candidates, raw, labels });
        }
        Ok(self.rounds.get_mut(&round).expect("just opened"))
    }

    pub fn append_problem(&mut self, problem: &Problem) -> Result<Receipt> {
        problem.validate()?;
        self.problems()?.append(problem)
    }

    pub fn has_problem(&mut self, id: &str) -> Result<bool> {
        Ok(self.problems()?.contains(id))
    }

    pub fn append_candidate(&mut self, candidate: &TranslationCandidate) -> Result<Receipt> {
        candidate.validate()?;
        self.round(candidate.round)?.candidates.append(candidate)
    }

    pub fn has_candidate(&mut self, key: &CandidateKey) -> Result<bool> {
        Ok(self.round(key.round)?.candidates.contains(&key.to_string()))
    }

    pub fn append_raw(&mut self, raw: &RawTranslation) -> Result<Option<Receipt>> {
        let journal = &mut self.round(raw.round)?.raw;
        let key = raw.journal_key().expect("raw translations are keyed");
        if journal.contains(&key) {
            return Ok(None);
        }
        journal.append(raw).map(Some)
    }

    pub fn append_label(&mut self, round: u32, label: &LabelRecord) -> Result<Receipt> {
        self.round(round)?.labels.append(label)
    }

    pub fn load_round(&self, round: u32) -> Result<Vec<TranslationCandidate>> {
        self.reader.load_round(round)
    }

    /// Ensures the round directory exists even when it ends up empty.
    pub fn touch_round(&mut self, round: u32) -> Result<()> {
        self.round(round).map(|_| ())
    }

    pub fn write_manifest(&mut self, manifest: &RoundManifest) -> Result<()> {
        manifest.validate()?;
        self.write_json(manifest.round, "manifest.json", manifest)
    }

    /// Atomically replaces `rounds/<round>/<name>` with pretty JSON.
    pub fn write_json<T: Serialize>(&mut self, round: u32, name: &str, value: &T) -> Result<()> {
        let dir = self.reader.round_dir(round);
        std::fs::create_dir_all(&dir).map_err(|e| CoreError::io(&dir, e))?;
        let path = dir.join(name);
        let tmp = dir.join(format!(".{name}.tmp"));
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        std::fs::write(&tmp, &bytes).map_err(|e| CoreError::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| CoreError::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{LintReport, TriState};

    fn candidate(problem: &str, idx: u32) -> TranslationCandidate {
        TranslationCandidate {
            problem_id: problem.into(),
            round: 1,
            sample_index: idx,
            statement_text: "theorem t : True := by sorry".into(),
            lint: LintReport::default(),
            compile: None,
            back_translation: None,
            nli: TriState::Unjudged,
            human: HumanVerdict::Unreviewed,
            modified_text: None,
            fingerprint: "fp".into(),
        }
    }

    #[test]
    fn single_writer_per_store() {
        let dir = tempfile::tempdir().unwrap();
        let _s = Store::open(dir.path()).unwrap();
        assert!(matches!(Store::open(dir.path()), Err(CoreError::Locked { .. })));
        StoreReader::open(dir.path()).unwrap();
    }

    #[test]
    fn version_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("store.json"), r#"{"format_version":99}"#).unwrap();
        assert!(matches!(StoreReader::open(dir.path()), Err(CoreError::VersionMismatch { found: 99, expected: 1 })));
    }

    #[test]
    fn labels_overlay_candidates_last_wins() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Store::open(dir.path()).unwrap();
        s.append_candidate(&candidate("p", 0)).unwrap();
        s.append_candidate(&candidate("q", 0)).unwrap();
        assert!(s.append_candidate(&candidate("p", 0)).is_err());
        let label = |v, text: Option<&str>| LabelRecord {
            candidate_id: "p:1:0".into(),
            verdict: v,
            modified_text: text.map(String::from),
            note: None,
        };
        s.append_label(1, &label(HumanVerdict::Rejected, None)).unwrap();
        s.append_label(1, &label(HumanVerdict::Modified, Some("theorem t : 1 = 1 := by sorry"))).unwrap();
        let round = s.load_round(1).unwrap();
        assert_eq!(round[0].human, HumanVerdict::Modified);
        assert_eq!(round[0].accepted_text(), "theorem t : 1 = 1 := by sorry");
        assert_eq!(round[1].human, HumanVerdict::Unreviewed);
        assert_eq!(s.reader().rounds().unwrap(), vec![1]);
    }

    #[test]
    fn raw_append_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Store::open(dir.path()).unwrap();
        let raw = RawTranslation {
            problem_id: "p".into(),
            round: 2,
            sample_index: 0,
            raw_text: "theorem x : True := sorry".into(),
            normalized_text: "theorem x : True := by sorry".into(),
        };
        assert!(s.append_raw(&raw).unwrap().is_some());
        assert!(s.append_raw(&raw).unwrap().is_none());
        assert_eq!(s.reader().load_raw(2).unwrap().len(), 1);
    }
}
