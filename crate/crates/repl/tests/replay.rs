use std::path::PathBuf;

use forge_core::CompileKind;
use forge_repl::{classify_response, ResponseFixture};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/repl")
}

fn load() -> Vec<ResponseFixture> {
    let mut paths: Vec<_> = std::fs::read_dir(fixture_dir())
        .expect("fixture dir")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).unwrap();
            serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
        })
        .collect()
}

fn replay(f: &ResponseFixture) -> CompileKind {
    let messages = f.response.as_ref().map(|r| r.diagnostics()).unwrap_or_default();
    classify_response(&messages, f.had_timeout, f.expects_proof)
}

#[test]
fn twenty_recorded_responses_classify_as_labelled() {
    let fixtures = load();
    assert_eq!(fixtures.len(), 20);
    let mismatches: Vec<String> = fixtures
        .iter()
        .filter_map(|f| {
            let got = replay(f);
            (got != f.expected).then(|| format!("{}: expected {:?}, got {got:?}", f.name, f.expected))
        })
        .collect();
    assert!(mismatches.is_empty(), "{mismatches:#?}");
}

#[test]
fn replay_is_deterministic() {
    let a: Vec<CompileKind> = load().iter().map(replay).collect();
    let b: Vec<CompileKind> = load().iter().map(replay).collect();
    assert_eq!(a, b);
}

#[test]
fn fixtures_cover_every_outcome() {
    let kinds: std::collections::BTreeSet<&str> = load().iter().map(|f| f.expected.as_str()).collect();
    for k in ["statement_pass", "proof_pass", "error", "timeout"] {
        assert!(kinds.contains(k), "no fixture for {k}");
    }
}

#[test]
fn fixtures_round_trip_through_serde() {
    for f in load() {
        let text = serde_json::to_string(&f).unwrap();
        let back: ResponseFixture = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
    }
}
