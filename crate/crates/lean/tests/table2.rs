use forge_core::FindingSeverity;
use forge_lean::{apply_fixes, lint, Linter};
use serde::Deserialize;

#[derive(Deserialize)]
struct Pattern {
    pattern: String,
    rule_id: String,
    severity: String,
    nl_text: String,
    wrong: String,
    modified: String,
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../fixtures/table2/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn patterns() -> Vec<Pattern> {
    serde_json::from_str(&fixture("patterns.json")).unwrap()
}

#[test]
fn ten_patterns() {
    assert_eq!(patterns().len(), 10);
    assert_eq!(patterns().iter().filter(|p| p.severity == "fixable").count(), 4);
}

#[test]
fn wrong_examples_trip_their_rule_and_modified_ones_do_not() {
    for p in patterns() {
        let wrong = lint(&p.wrong, Some(&p.nl_text));
        let f = wrong
            .findings
            .iter()
            .find(|f| f.rule_id == p.rule_id)
            .unwrap_or_else(|| panic!("{}: no {} finding in {wrong:?}", p.pattern, p.rule_id));
        let expected = if p.severity == "fixable" { FindingSeverity::Fixable } else { FindingSeverity::Flag };
        assert_eq!(f.severity, expected, "{}", p.pattern);

        let modified = lint(&p.modified, Some(&p.nl_text));
        assert!(!modified.has_rule(&p.rule_id), "{}: {modified:?}", p.pattern);
        assert_eq!(modified.fixable_count(), 0, "{}", p.pattern);
    }
}

#[test]
fn fixable_rules_reproduce_modified_text() {
    for p in patterns().into_iter().filter(|p| p.severity == "fixable") {
        let report = lint(&p.wrong, Some(&p.nl_text));
        assert_eq!(apply_fixes(&p.wrong, &report).unwrap(), p.modified, "{}", p.pattern);
    }
}

#[test]
fn fix_on_wrong_file_matches_golden_bytes() {
    let wrong = fixture("wrong.lean");
    let report = Linter::default().lint_document(&wrong, None);
    assert_eq!(apply_fixes(&wrong, &report).unwrap(), fixture("modified.lean"));
}
