#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use forge_core::store::Store;
use forge_pipeline::synthetic::Workload;
use forge_pipeline::{run_round, FaultInjector, RoundConfig, Stages};

pub const FORGE: &str = env!("CARGO_BIN_EXE_forge");

pub fn repo_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn forge(args: &[&str]) -> Output {
    Command::new(FORGE)
        .args(args)
        .env_remove("FORGE_STORE")
        .env_remove("FORGE_CHECKER")
        .env_remove("FORGE_CHECKER_PROGRAM")
        .output()
        .expect("run forge")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// The JSON error object a failed command prints on stderr.
pub fn stderr_error(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no JSON error in {text:?}"));
    serde_json::from_str(line).unwrap()
}

/// Writes the mock workload and a round config under `dir`.
pub fn round_config(dir: &Path, workload: &Workload, round: u32) -> RoundConfig {
    workload.write_mock(&dir.join("fixtures")).unwrap();
    let text = format!(
        "round = {round}\nmodel_id = \"mock-translator\"\nseed = 7\nstore = \"store\"\n\
         [backends.default]\nkind = \"mock\"\nfixtures = \"fixtures\"\n[gateway]\nbackoff_ms = 1\n"
    );
    let path = dir.join(format!("round{round}.toml"));
    std::fs::write(&path, text).unwrap();
    RoundConfig::load(&path).unwrap()
}

/// A store holding one finished mock round over `n` problems.
pub fn finished_round(dir: &Path, n: usize) -> RoundConfig {
    let w = Workload::funnel(n);
    let cfg = round_config(dir, &w, 1);
    let mut store = Store::open(&cfg.store).unwrap();
    for p in &w.problems {
        store.append_problem(p).unwrap();
    }
    run_round(&mut store, &Stages::build(&cfg).unwrap(), &cfg, &FaultInjector::none()).unwrap();
    cfg
}
