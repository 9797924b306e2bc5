use forge_lean::normalize::normalize_text;
use forge_lean::{parse_statement, Binder, BinderKind, DeclKeyword, NamePolicy, ParsedTheorem, Terminator};
use proptest::prelude::*;

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,6}'?".prop_filter("keyword", |s| {
        !matches!(
            s.as_str(),
            "theorem"
                | "lemma"
                | "by"
                | "sorry"
                | "fun"
                | "if"
                | "then"
                | "else"
                | "def"
                | "example"
                | "instance"
                | "abbrev"
        )
    })
}

fn atom() -> impl Strategy<Value = String> {
    prop_oneof![ident(), (0u32..1000).prop_map(|n| n.to_string()), Just("ℝ".to_string()), Just("π".to_string())]
}

fn expr() -> impl Strategy<Value = String> {
    atom().prop_recursive(3, 12, 3, |inner| {
        let op = prop::sample::select(vec!["+", "*", "-", "^", "/", "≤", "<", "=", "∧", "∨", "→", "↔", "∣"]);
        prop_oneof![
            (inner.clone(), op, inner.clone()).prop_map(|(a, o, b)| format!("{a} {o} {b}")),
            inner.clone().prop_map(|a| format!("({a})")),
            (ident(), inner.clone()).prop_map(|(f, a)| format!("f_{f} {a}")),
            (ident(), inner.clone()).prop_map(|(x, a)| format!("∀ {x} : ℕ, {a}")),
            inner.prop_map(|a| format!("{{x | {a}}}")),
        ]
    })
}

fn binder() -> impl Strategy<Value = Binder> {
    let kind = prop::sample::select(vec![BinderKind::Explicit, BinderKind::Implicit]);
    prop_oneof![
        (prop::collection::vec(ident(), 1..3), expr(), kind).prop_map(|(names, type_text, kind)| Binder {
            names,
            type_text,
            kind
        }),
        ident().prop_map(|c| Binder { names: vec![], type_text: format!("Fintype {c}"), kind: BinderKind::Instance }),
    ]
}

fn theorem() -> impl Strategy<Value = ParsedTheorem> {
    let kw = prop::sample::select(vec![DeclKeyword::Theorem, DeclKeyword::Lemma]);
    let term = prop_oneof![
        Just(Terminator::Sorry { tactic: true }),
        Just(Terminator::Sorry { tactic: false }),
        Just(Terminator::ProofBody("by simp".into())),
        Just(Terminator::Missing),
    ];
    (kw, ident(), prop::collection::vec(binder(), 0..4), expr(), term).prop_map(
        |(keyword, name, binders, goal_text, terminator)| ParsedTheorem {
            preamble: None,
            keyword,
            name,
            binders,
            goal_text,
            terminator,
        },
    )
}

proptest! {
    #[test]
    fn parse_inverts_serialize(t in theorem()) {
        let src = t.to_source();
        prop_assert_eq!(parse_statement(&src).unwrap(), t);
    }

    #[test]
    fn normalize_is_idempotent(t in theorem(), noise in prop::collection::vec(prop::sample::select(vec![" ", "  ", "\n", "\t"]), 1..5)) {
        let spaced = t.to_source().replace(' ', noise.concat().as_str());
        let once = normalize_text(&spaced, &NamePolicy::Keep).unwrap();
        let twice = normalize_text(&once, &NamePolicy::Keep).unwrap();
        prop_assert!(once.ends_with(":= by sorry"));
        prop_assert_eq!(once, twice);
    }
}
