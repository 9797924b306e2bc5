use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::tags;

/// Three-valued verdict used for well-definedness and NLI judgements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriState {
    Positive,
    Negative,
    /// The judge answered without a recognizable verdict, even on retry.
    /// Counts as negative wherever a pass is required.
    Indeterminate,
    #[default]
    Unjudged,
}

impl TriState {
    pub fn is_positive(self) -> bool {
        self == TriState::Positive
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub source: String,
    pub nl_text: String,
    pub answer: Option<String>,
    pub tags: Vec<String>,
    pub well_defined: TriState,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(CoreError::validation("problem id is empty"));
        }
        if let Some(tag) = self.tags.iter().find(|t| !tags::is_normalized(t)) {
            return Err(CoreError::validation(format!("problem {}: tag {tag:?} is not normalized", self.id)));
        }
        if matches!(&self.answer, Some(a) if a.trim().is_empty()) {
            return Err(CoreError::validation(format!(
                "problem {}: answer is blank, use null for proof problems",
                self.id
            )));
        }
        Ok(())
    }
}

/// Identity of a candidate inside a store: `(problem_id, round, sample_index)`.
///
/// Rendered as `problem_id:round:sample_index`; parsing splits from the right
/// so problem ids may themselves contain `:`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidateKey {
    pub problem_id: String,
    pub round: u32,
    pub sample_index: u32,
}

impl fmt::Display for CandidateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.problem_id, self.round, self.sample_index)
    }
}

impl FromStr for CandidateKey {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.rsplitn(3, ':');
        let bad = || CoreError::validation(format!("malformed candidate id {s:?}"));
        let sample_index = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let round = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let problem_id = parts.next().filter(|p| !p.is_empty()).ok_or_else(bad)?;
        Ok(CandidateKey { problem_id: problem_id.to_string(), round, sample_index })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompileKind {
    StatementPass,
    ProofPass,
    Error,
    Timeout,
    WorkerCrash,
}

impl CompileKind {
    /// True when the statement elaborated, with or without a real proof.
    pub fn is_pass(self) -> bool {
        matches!(self, CompileKind::StatementPass | CompileKind::ProofPass)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CompileKind::StatementPass => "statement_pass",
            CompileKind::ProofPass => "proof_pass",
            CompileKind::Error => "error",
            CompileKind::Timeout => "timeout",
            CompileKind::WorkerCrash => "worker_crash",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageSeverity {
    Error,
    Warning,
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Position {
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagMessage {
    pub severity: MessageSeverity,
    pub text: String,
    pub position: Option<Position>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileVerdict {
    pub kind: CompileKind,
    pub messages: Vec<DiagMessage>,
    pub elapsed_ms: u64,
    pub env_tag: String,
}

impl CompileVerdict {
    pub fn is_pass(&self) -> bool {
        self.kind.is_pass()
    }

    pub fn errors(&self) -> impl Iterator<Item = &DiagMessage> {
        self.messages.iter().filter(|m| m.severity == MessageSeverity::Error)
    }
}

/// Half-open byte range, serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn shifted(&self, by: usize) -> Span {
        Span::new(self.start + by, self.end + by)
    }
}

impl From<[usize; 2]> for Span {
    fn from([start, end]: [usize; 2]) -> Self {
        Span { start, end }
    }
}

impl From<Span> for [usize; 2] {
    fn from(span: Span) -> Self {
        [span.start, span.end]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingSeverity {
    /// Carries a suggestion that can be applied mechanically.
    Fixable,
    /// Needs human or model judgement.
    Flag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub rule_id: String,
    pub span: Span,
    pub severity: FindingSeverity,
    pub suggestion: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintReport {
    pub findings: Vec<Finding>,
}

impl LintReport {
    pub fn fixable(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == FindingSeverity::Fixable)
    }

    pub fn fixable_count(&self) -> usize {
        self.fixable().count()
    }

    pub fn has_rule(&self, rule_id: &str) -> bool {
        self.findings.iter().any(|f| f.rule_id == rule_id)
    }

    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HumanVerdict {
    #[default]
    Unreviewed,
    Correct,
    Modified,
    Rejected,
}

impl HumanVerdict {
    pub fn is_accepted(self) -> bool {
        matches!(self, HumanVerdict::Correct | HumanVerdict::Modified)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationCandidate {
    pub problem_id: String,
    pub round: u32,
    pub sample_index: u32,
    pub statement_text: String,
    pub lint: LintReport,
    pub compile: Option<CompileVerdict>,
    pub back_translation: Option<String>,
    pub nli: TriState,
    pub human: HumanVerdict,
    pub modified_text: Option<String>,
    pub fingerprint: String,
}

impl TranslationCandidate {
    pub fn key(&self) -> CandidateKey {
        CandidateKey { problem_id: self.problem_id.clone(), round: self.round, sample_index: self.sample_index }
    }

    pub fn id(&self) -> String {
        self.key().to_string()
    }

    pub fn compiled(&self) -> bool {
        self.compile.as_ref().is_some_and(CompileVerdict::is_pass)
    }

    pub fn nli_passed(&self) -> bool {
        self.compiled() && self.nli.is_positive()
    }

    /// The text a human signed off on: the edit when modified, else the original.
    pub fn accepted_text(&self) -> &str {
        match (&self.human, &self.modified_text) {
            (HumanVerdict::Modified, Some(text)) => text,
            _ => &self.statement_text,
        }
    }

    /// Checks the invariants that do not depend on the statement parser.
    /// Fingerprint agreement is checked where the parser is available.
    pub fn validate(&self) -> Result<()> {
        if self.nli.is_positive() && !self.compiled() {
            return Err(CoreError::validation(format!("candidate {}: positive NLI without a compile pass", self.id())));
        }
        match (self.human, &self.modified_text) {
            (HumanVerdict::Modified, None) => {
                Err(CoreError::validation(format!("candidate {}: modified without modified_text", self.id())))
            }
            (HumanVerdict::Modified, Some(text)) if *text == self.statement_text => {
                Err(CoreError::validation(format!("candidate {}: modified_text equals statement_text", self.id())))
            }
            (HumanVerdict::Modified, Some(_)) | (_, None) => Ok(()),
            (_, Some(_)) => Err(CoreError::validation(format!(
                "candidate {}: modified_text set but verdict is not modified",
                self.id()
            ))),
        }
    }
}

fn default_n_samples() -> u32 {
    1
}

fn default_timeout_s() -> f64 {
    60.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    #[serde(default = "default_n_samples")]
    pub n_samples: u32,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub proof_k: u32,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { n_samples: 1, temperature: 0.0, proof_k: 0, timeout_s: 60.0 }
    }
}

impl SamplingConfig {
    /// Best-of-100 at temperature 0.7, used for competition problems.
    pub fn imo() -> Self {
        SamplingConfig { n_samples: 100, temperature: 0.7, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 1 {
            return Err(CoreError::validation("n_samples must be at least 1"));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(CoreError::validation(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if self.timeout_s.is_nan() || self.timeout_s <= 0.0 {
            return Err(CoreError::validation("timeout_s must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RoundManifest {
    pub round: u32,
    pub model_id: String,
    pub translated_count: u64,
    pub cpn: u64,
    pub npn: u64,
    /// Tag → number of NLI-passing candidates carrying it. A multi-tagged
    /// problem counts once under each of its tags.
    pub per_tag_counts: BTreeMap<String, u64>,
    pub human_labels_added: u64,
    pub config_digest: String,
    pub seed: u64,
}

impl RoundManifest {
    pub fn validate(&self) -> Result<()> {
        if !(self.npn <= self.cpn && self.cpn <= self.translated_count) {
            return Err(CoreError::validation(format!(
                "round {}: expected npn <= cpn <= translated, got {} / {} / {}",
                self.round, self.npn, self.cpn, self.translated_count
            )));
        }
        if let Some((tag, n)) = self.per_tag_counts.iter().find(|(_, n)| **n > self.npn) {
            return Err(CoreError::validation(format!(
                "round {}: tag {tag} count {n} exceeds npn {}",
                self.round, self.npn
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn candidate() -> TranslationCandidate {
        TranslationCandidate {
            problem_id: "aops:12".into(),
            round: 2,
            sample_index: 0,
            statement_text: "theorem t : True := by sorry".into(),
            lint: LintReport::default(),
            compile: None,
            back_translation: None,
            nli: TriState::Unjudged,
            human: HumanVerdict::Unreviewed,
            modified_text: None,
            fingerprint: String::new(),
        }
    }

    #[test]
    fn candidate_key_round_trips_with_colons() {
        let key = candidate().key();
        assert_eq!(key.to_string(), "aops:12:2:0");
        assert_eq!("aops:12:2:0".parse::<CandidateKey>().unwrap(), key);
        assert!("nope".parse::<CandidateKey>().is_err());
        assert!(":1:2".parse::<CandidateKey>().is_err());
    }

    #[test]
    fn nli_requires_compile_pass() {
        let mut c = candidate();
        c.nli = TriState::Positive;
        assert!(c.validate().is_err());
        c.compile = Some(CompileVerdict {
            kind: CompileKind::StatementPass,
            messages: vec![],
            elapsed_ms: 1,
            env_tag: "test".into(),
        });
        c.validate().unwrap();
    }

    #[test]
    fn modified_needs_distinct_text() {
        let mut c = candidate();
        c.human = HumanVerdict::Modified;
        assert!(c.validate().is_err());
        c.modified_text = Some(c.statement_text.clone());
        assert!(c.validate().is_err());
        c.modified_text = Some("theorem t : 1 = 1 := by sorry".into());
        c.validate().unwrap();
        assert_eq!(c.accepted_text(), "theorem t : 1 = 1 := by sorry");
    }

    #[test]
    fn span_serializes_as_pair() {
        let s = serde_json::to_string(&Span::new(3, 9)).unwrap();
        assert_eq!(s, "[3,9]");
        let back: Span = serde_json::from_str(&s).unwrap();
        assert_eq!(back, Span::new(3, 9));
    }

    #[test]
    fn sampling_config_bounds() {
        SamplingConfig::imo().validate().unwrap();
        let bad = SamplingConfig { temperature: 2.5, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SamplingConfig { timeout_s: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SamplingConfig { n_samples: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn problem_rejects_blank_answer_and_raw_tags() {
        let mut p = Problem {
            id: "p1".into(),
            source: "post-1".into(),
            nl_text: "Compute 2+3.".into(),
            answer: Some("5".into()),
            tags: vec!["number_theory".into()],
            well_defined: TriState::Positive,
        };
        p.validate().unwrap();
        p.answer = Some("  ".into());
        assert!(p.validate().is_err());
        p.answer = None;
        p.tags = vec!["Number Theory".into()];
        assert!(p.validate().is_err());
    }
}
