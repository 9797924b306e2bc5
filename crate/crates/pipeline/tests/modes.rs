mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use forge_core::store::Store;
use forge_core::{
    AccuracyRow, CompileKind, CompileVerdict, HumanVerdict, LintReport, Problem, TranslationCandidate, TriState,
};
use forge_llm::{MockEntry, PromptId};
use forge_pipeline::labels::{merge_human_labels, Rejection, VerdictSubmission};
use forge_pipeline::review::{enqueue_review, quota_map, PatternTriage, ReviewRegistry, TagStratified};
use forge_pipeline::synthetic::Workload;
use forge_pipeline::{corpus_pass_rate, imo_mode, proof_search, Stages};
use forge_repl::MockChecker;

use common::mock_stages;

fn problem(id: &str, tags: &[&str]) -> Problem {
    Problem {
        id: id.into(),
        source: "fixture".into(),
        nl_text: format!("Problem {id}."),
        answer: None,
        tags: tags.iter().map(|t| t.to_string()).collect(),
        well_defined: TriState::Positive,
    }
}

fn candidate(problem_id: &str, round: u32, compile: CompileKind, nli: TriState) -> TranslationCandidate {
    TranslationCandidate {
        problem_id: problem_id.into(),
        round,
        sample_index: 0,
        statement_text: format!("theorem {} (a : ℝ) (h : 1 < a) : a > 0 := by sorry", problem_id.replace('-', "_")),
        lint: LintReport::default(),
        compile: Some(CompileVerdict { kind: compile, messages: vec![], elapsed_ms: 0, env_tag: "mock".into() }),
        back_translation: None,
        nli,
        human: HumanVerdict::Unreviewed,
        modified_text: None,
        fingerprint: String::new(),
    }
}

/// `counts` NLI-passing candidates per tag, one tag per problem.
fn tagged_store(dir: &std::path::Path, counts: &[(&str, usize)]) -> Store {
    let mut store = Store::open(dir).unwrap();
    for (tag, n) in counts {
        for i in 0..*n {
            let id = format!("{tag}-{i}");
            store.append_problem(&problem(&id, &[tag])).unwrap();
            store.append_candidate(&candidate(&id, 1, CompileKind::StatementPass, TriState::Positive)).unwrap();
        }
    }
    store
}

#[test]
fn quotas_from_table1_counts() {
    let rows: Vec<AccuracyRow> = serde_json::from_slice(
        &std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/paper/table1_accuracy.json")).unwrap(),
    )
    .unwrap();
    let counts: BTreeMap<String, u64> = rows.iter().map(|r| (r.tag.clone(), r.count)).collect();
    let q = quota_map(&counts);
    assert_eq!((q["inequality"], q["algebra"], q["number_theory"], q["trigonometry"]), (10, 10, 10, 5));
    // oracle: rank by count, then the three largest get ten
    let mut ranked: Vec<&AccuracyRow> = rows.iter().filter(|r| r.count > 100).collect();
    ranked.sort_by_key(|r| std::cmp::Reverse(r.count));
    for (i, r) in ranked.iter().enumerate() {
        assert_eq!(q[&r.tag], if i < 3 { 10 } else { 5 }, "{}", r.tag);
    }
    assert_eq!(q.len(), ranked.len());
    // the sampled sizes in the table are these quotas
    for r in &rows {
        assert_eq!(u64::from(q[&r.tag]), r.sampled_total, "{}", r.tag);
    }
}

#[test]
fn stratified_batches_are_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let store =
        tagged_store(dir.path(), &[("inequality", 250), ("number_theory", 150), ("algebra", 120), ("polynomial", 50)]);
    let r = store.reader();
    let a = enqueue_review(r, 1, &TagStratified, 11).unwrap();
    let b = enqueue_review(r, 1, &TagStratified, 11).unwrap();
    let c = enqueue_review(r, 1, &TagStratified, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.items, c.items);
    assert_eq!(a.items.len(), 30);
    assert!(a.warning.is_none());
    assert!(!a.quota_map.contains_key("polynomial"));
    let round: Vec<String> = store.load_round(1).unwrap().iter().map(|c| c.id()).collect();
    assert!(a.items.iter().all(|id| round.contains(id)));
    for tag in ["inequality", "number_theory", "algebra"] {
        assert_eq!(a.items.iter().filter(|id| id.starts_with(tag)).count(), 10);
    }
    assert_eq!(serde_json::from_str::<forge_pipeline::ReviewBatch>(&serde_json::to_string(&a).unwrap()).unwrap(), a);
}

#[test]
fn stratified_without_common_tags_warns() {
    let dir = tempfile::tempdir().unwrap();
    let store = tagged_store(dir.path(), &[("inequality", 100), ("polynomial", 3)]);
    let batch = enqueue_review(store.reader(), 1, &TagStratified, 0).unwrap();
    assert!(batch.items.is_empty());
    assert!(batch.warning.is_some());
}

#[test]
fn triage_takes_failures_compile_first() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = Store::open(dir.path()).unwrap();
    for (id, kind, nli) in [
        ("a", CompileKind::StatementPass, TriState::Positive),
        ("b", CompileKind::StatementPass, TriState::Negative),
        ("c", CompileKind::Error, TriState::Unjudged),
        ("d", CompileKind::StatementPass, TriState::Indeterminate),
        ("e", CompileKind::Timeout, TriState::Unjudged),
    ] {
        store.append_problem(&problem(id, &["inequality"])).unwrap();
        store.append_candidate(&candidate(id, 1, kind, nli)).unwrap();
    }
    let batch = enqueue_review(store.reader(), 1, &PatternTriage, 0).unwrap();
    assert_eq!(batch.items, vec!["c:1:0", "e:1:0", "b:1:0", "d:1:0"]);

    let dir = tempfile::tempdir().unwrap();
    let store = tagged_store(dir.path(), &[("inequality", 4)]);
    assert!(enqueue_review(store.reader(), 1, &PatternTriage, 0).unwrap().items.is_empty());
    assert!(enqueue_review(store.reader(), 9, &PatternTriage, 0).is_err());
    assert_eq!(ReviewRegistry::default().get("pattern_triage").unwrap().name(), "pattern_triage");
}

fn label(id: &str, verdict: HumanVerdict, text: Option<&str>) -> VerdictSubmission {
    VerdictSubmission { candidate_id: id.into(), verdict, modified_text: text.map(Into::into), note: None }
}

#[test]
fn thirty_labels_twenty_eight_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = tagged_store(dir.path(), &[("inequality", 32)]);
    store
        .write_manifest(&forge_core::RoundManifest {
            round: 1,
            model_id: "m".into(),
            translated_count: 32,
            cpn: 32,
            npn: 32,
            ..Default::default()
        })
        .unwrap();
    let checker = MockChecker::new();
    let mut subs = Vec::new();
    for i in 0..20 {
        subs.push(label(&format!("inequality-{i}:1:0"), HumanVerdict::Correct, None));
    }
    for i in 20..28 {
        subs.push(label(
            &format!("inequality-{i}:1:0"),
            HumanVerdict::Modified,
            Some(&format!("theorem m{i} (a : ℝ) (h : 2 < a) : a > 1 := by sorry")),
        ));
    }
    for i in 28..30 {
        subs.push(label(&format!("inequality-{i}:1:0"), HumanVerdict::Rejected, None));
    }
    let report = merge_human_labels(&mut store, &checker, 1, &subs).unwrap();
    assert_eq!((report.applied, report.delta, report.rejected.len()), (30, 28, 0));
    assert_eq!(checker.calls(), 8);
    assert_eq!(store.reader().read_manifest(1).unwrap().unwrap().human_labels_added, 28);
    let round = store.load_round(1).unwrap();
    assert_eq!(round.iter().filter(|c| c.human.is_accepted()).count(), 28);
    assert_eq!(round.iter().filter(|c| c.human == HumanVerdict::Rejected).count(), 2);

    let empty = merge_human_labels(&mut store, &checker, 1, &[]).unwrap();
    assert_eq!((empty.applied, empty.delta, empty.human_labels_total), (0, 0, 28));
}

#[test]
fn bad_labels_are_refused_and_the_rest_applied() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = tagged_store(dir.path(), &[("inequality", 3)]);
    let checker = MockChecker::new();
    let subs = vec![
        label("nobody:1:0", HumanVerdict::Correct, None),
        label(
            "inequality-0:1:0",
            HumanVerdict::Modified,
            Some("theorem m (a b c : ℝ) (h : a + = b) : a ≥ c := by sorry"),
        ),
        label("inequality-1:1:0", HumanVerdict::Modified, None),
        label("inequality-2:1:0", HumanVerdict::Correct, None),
    ];
    let report = merge_human_labels(&mut store, &checker, 1, &subs).unwrap();
    assert_eq!((report.applied, report.delta), (1, 1));
    assert_eq!(report.rejected.len(), 3);
    assert_eq!(report.rejected[0].reason, Rejection::UnknownCandidate);
    match &report.rejected[1].reason {
        Rejection::CompileFailed { verdict } => {
            assert_eq!(verdict.kind, CompileKind::Error);
            assert!(verdict.errors().next().is_some());
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(report.rejected[2].reason, Rejection::Invalid { .. }));
    assert_eq!(store.reader().load_labels(1).unwrap().len(), 1);
}

#[test]
fn imo_hundred_samples_one_survivor() {
    let w = Workload::imo();
    let stages = mock_stages(w.mock.clone());
    let report = imo_mode(&stages, &w.problems[0], 100, 0.7).unwrap();
    assert_eq!((report.samples, report.distinct, report.compiled), (100, 3, 2));
    assert_eq!(report.survivors.len(), 1);
    let first = &report.ranked[0];
    assert!(first.survives());
    assert_eq!(first.frequency, 50);
    assert_eq!(first.first_seen, 0);
    assert!(first.statement_text.starts_with("theorem imo_1983_p6 (a b c : ℝ)"));
    assert_eq!(report.ranked.iter().map(|r| r.frequency).collect::<Vec<_>>(), vec![50, 30, 20]);
    assert_eq!(report.ranked[2].compile.as_ref().unwrap().kind, CompileKind::Error);
    assert_eq!(report.ranked[1].nli, TriState::Negative);

    let single = imo_mode(&mock_stages(w.mock.clone()), &w.problems[0], 1, 0.7).unwrap();
    assert_eq!((single.distinct, single.survivors.len()), (1, 1));
    assert!(imo_mode(&stages, &w.problems[0], 0, 0.7).is_err());
}

fn proofs_stages(proofs: Vec<String>) -> (Stages, Arc<MockChecker>) {
    let mut stages = mock_stages(vec![MockEntry {
        prompt: PromptId::Prove,
        key: Some("*".into()),
        contains: None,
        responses: proofs,
        fail_times: 0,
    }]);
    let checker = Arc::new(MockChecker::new());
    stages.checker = checker.clone();
    (stages, checker)
}

#[test]
fn proof_search_stops_at_first_success() {
    let statement = "theorem t (a : ℝ) (h : 1 < a) : a > 0 := by sorry";
    let mut proofs: Vec<String> =
        (1..=8).map(|i| format!("by\n  -- sim:error linarith failed {i}\n  linarith")).collect();
    proofs[2] = "by linarith".into();
    let (stages, checker) = proofs_stages(proofs);
    let s = proof_search(&stages, "t", statement, 8, 1.0);
    assert!(s.solved);
    assert_eq!((s.winning_index, s.attempts), (Some(3), 3));
    assert_eq!(s.failures, vec![CompileKind::Error, CompileKind::Error]);
    assert_eq!(checker.calls(), 3);

    let none = proof_search(&stages, "t", statement, 0, 1.0);
    assert!(!none.solved && none.attempts == 0 && none.winning_index.is_none());
    assert_eq!(checker.calls(), 3);

    let (all_fail, checker) = proofs_stages(vec!["by\n  -- sim:error nope\n  simp".into()]);
    let s = proof_search(&all_fail, "u", statement, 4, 1.0);
    assert!(!s.solved);
    assert_eq!((s.attempts, checker.calls()), (4, 4));

    let rate = corpus_pass_rate(&[proof_search(&stages, "t", statement, 8, 1.0), s], 8).unwrap();
    assert_eq!(rate.display(), "50.0%");
}
