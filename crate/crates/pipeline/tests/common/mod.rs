#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use forge_core::store::Store;
use forge_lean::Linter;
use forge_llm::{Gateway, GatewayConfig, MockBackend, MockEntry, PromptRegistry};
use forge_pipeline::synthetic::Workload;
use forge_pipeline::{Gateways, RoundConfig, Stages};
use forge_repl::MockChecker;

pub fn mock_stages(mock: Vec<MockEntry>) -> Stages {
    let gateway = Arc::new(Gateway::new(
        Arc::new(MockBackend::new(mock)),
        Arc::new(PromptRegistry::default()),
        GatewayConfig { backoff_ms: 1, ..Default::default() },
    ));
    Stages {
        gateways: Gateways::uniform(gateway),
        checker: Arc::new(MockChecker::new()),
        linter: Arc::new(Linter::default()),
        apply_fixes: true,
    }
}

/// A round config reading the workload's responses from a fixture dir.
pub fn mock_config(dir: &Path, workload: &Workload, round: u32) -> RoundConfig {
    let fixtures = dir.join("fixtures");
    workload.write_mock(&fixtures).unwrap();
    let text = format!(
        "round = {round}\nmodel_id = \"mock-translator\"\nseed = 7\nstore = \"store\"\n\
         [backends.default]\nkind = \"mock\"\nfixtures = \"fixtures\"\n[gateway]\nbackoff_ms = 1\n"
    );
    let path = dir.join("round.toml");
    std::fs::write(&path, text).unwrap();
    RoundConfig::load(&path).unwrap()
}

pub fn seeded_store(path: &Path, workload: &Workload) -> Store {
    let mut store = Store::open(path).unwrap();
    for p in &workload.problems {
        store.append_problem(p).unwrap();
    }
    store
}
