//! One function per subcommand. Each returns the process exit code or a
//! `CliError`; tables and reports go to stdout, logs to stderr.

use std::collections::HashMap;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use forge_core::export::{dataset_records, export_training_pairs, write_jsonl, ExportMeta};
use forge_core::store::{Store, StoreReader};
use forge_core::{CoreError, Problem, TranslationCandidate};
use forge_lean::{apply_fixes, Linter};
use forge_llm::BackendRegistry;
use forge_pipeline::config::{build_checker, load_prompts};
use forge_pipeline::ingest::{filtered_problems, read_problems};
use forge_pipeline::labels::read_submissions;
use forge_pipeline::synthetic::Workload;
use forge_pipeline::{
    corpus_pass_rate, enqueue_review, imo_mode, import_problems, ingest_dir, merge_human_labels, proof_search,
    render_table, rephrase_answer, run_round, CheckerSpec, FaultInjector, FunnelReport, Gateways, Rejection,
    ReviewBatch, ReviewRegistry, RoundConfig, Stage, Stages, TagAllowlist,
};
use forge_repl::{LauncherRegistry, StatementChecker};
use serde::Deserialize;
use serde_json::json;

use crate::api::{ApiState, Server};
use crate::checker::CheckerArgs;
use crate::cli::{
    Cli, Command, ExportCommand, Format, LabelsCommand, ReplCommand, ReviewCommand, RoundCommand, SelectArgs,
};
use crate::error::{read_file, CliError, CliResult, EXIT_OK};
use crate::stats::{load_stats, render_accuracy, reportable_rounds};

pub const DEFAULT_STORE: &str = "forge-store";

pub fn run(cli: Cli) -> CliResult<i32> {
    let store = cli.store;
    match cli.command {
        Command::Ingest { dir, config } => ingest(store, &dir, &config),
        Command::Import { file } => import(store, &file),
        Command::Filter { tags, out } => filter(store, tags, out.as_deref()),
        Command::Round(RoundCommand::Run { config, crash_at, checker }) => {
            round_run(store, &config, crash_at.as_deref(), &checker)
        }
        Command::Review(ReviewCommand::Enqueue { round, select }) => review_enqueue(store, round, &select),
        Command::Review(ReviewCommand::Serve { round, host, port, ui_dir, max_checks, select, checker }) => {
            review_serve(store, round, &host, port, ui_dir, max_checks, &select, &checker)
        }
        Command::Labels(LabelsCommand::Merge { file, round, checker }) => labels_merge(store, &file, round, &checker),
        Command::Export(ExportCommand::Dataset { rounds, out }) => export(store, rounds, &out, false),
        Command::Export(ExportCommand::Pairs { rounds, out }) => export(store, rounds, &out, true),
        Command::Stats { round, format } => stats(store, round, format),
        Command::Imo { problems, config, k, temperature, out, checker } => {
            imo(&problems, &config, k, temperature, out.as_deref(), &checker)
        }
        Command::Prove { candidates, config, k, temperature, out, checker } => {
            prove(&candidates, &config, k, temperature, out.as_deref(), &checker)
        }
        Command::Lint { file, nl } => lint(&file, nl.as_deref()),
        Command::Fix { file, out } => fix(&file, out.as_deref()),
        Command::Repl(ReplCommand::Check { file, proof, checker }) => repl_check(&file, proof.as_deref(), &checker),
        Command::Demo { dir, problems } => demo(&dir, problems),
        Command::SimRepl(args) => Ok(forge_repl::sim::run(&args)),
    }
}

fn store_path(flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| PathBuf::from(DEFAULT_STORE))
}

fn load_config(path: &Path, store: Option<PathBuf>) -> CliResult<RoundConfig> {
    let mut cfg = RoundConfig::load(path)?;
    if let Some(s) = store {
        cfg.store = s;
    }
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| forge_pipeline::PipelineError::io(p, e).into()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::environment("io", e.to_string()))
        }
    }
}

fn ingest(store: Option<PathBuf>, dir: &Path, config: &Path) -> CliResult<i32> {
    let cfg = load_config(config, store)?;
    let mut store = Store::open(&cfg.store)?;
    let prompts = load_prompts(cfg.prompts.as_deref())?;
    let gateways = Gateways::build(&cfg.backends, &BackendRegistry::default(), prompts, &cfg.gateway)?;
    let report = ingest_dir(&mut store, &gateways.extract, &gateways.judge, dir)?;
    print_json(&report);
    if !report.failed_posts.is_empty() {
        return Err(CliError::partial(format!("{} posts failed extraction", report.failed_posts.len()))
            .with_details(json!({ "failed_posts": report.failed_posts })));
    }
    Ok(EXIT_OK)
}

fn import(store: Option<PathBuf>, file: &Path) -> CliResult<i32> {
    let mut store = Store::open(store_path(store))?;
    let added = import_problems(&mut store, file)?;
    println!("imported {added} problems");
    Ok(EXIT_OK)
}

fn filter(store: Option<PathBuf>, tags: Option<Vec<String>>, out: Option<&Path>) -> CliResult<i32> {
    let reader = StoreReader::open(store_path(store))?;
    let allowlist = match tags {
        Some(t) => TagAllowlist::new(t)?,
        None => TagAllowlist::default(),
    };
    let kept = filtered_problems(&reader, &allowlist)?;
    let mut text = String::new();
    for p in &kept {
        text.push_str(&serde_json::to_string(p).expect("serializable"));
        text.push('\n');
    }
    write_output(out, &text)?;
    log::info!("{} problems kept", kept.len());
    Ok(EXIT_OK)
}

fn parse_crash_at(spec: &str) -> CliResult<FaultInjector> {
    let bad = || CliError::validation("invalid_argument", format!("--crash-at expects <stage>:<n>, got {spec:?}"));
    let (name, nth) = spec.split_once(':').ok_or_else(bad)?;
    let stage = Stage::ALL.into_iter().find(|s| s.as_str() == name).ok_or_else(bad)?;
    let nth: u64 = nth.parse().map_err(|_| bad())?;
    Ok(FaultInjector::crash_at(stage, nth))
}

/// Table rows for every round that has a funnel report.
fn round_rows(reader: &StoreReader) -> CliResult<Vec<forge_pipeline::RoundRow>> {
    let mut rows = Vec::new();
    for r in reportable_rounds(reader)? {
        rows.push(load_stats(reader, r)?.row);
    }
    Ok(rows)
}

fn funnel_summary(f: &FunnelReport) -> String {
    let mut s = format!(
        "round {}: extracted {}, well-defined {}, tag-kept {}, translated {}, compiled {}, nli-passed {}",
        f.round, f.extracted, f.well_defined, f.tag_kept, f.translated, f.cpn, f.npn
    );
    if !f.fixes_applied.is_empty() {
        let fixes: Vec<String> = f.fixes_applied.iter().map(|(k, v)| format!("{k} {v}")).collect();
        s.push_str(&format!("\nlint fixes: {}", fixes.join(", ")));
    }
    s
}

fn round_run(store: Option<PathBuf>, config: &Path, crash_at: Option<&str>, checker: &CheckerArgs) -> CliResult<i32> {
    let mut cfg = load_config(config, store)?;
    checker.apply(&mut cfg.checker)?;
    let faults = match crash_at {
        Some(spec) => parse_crash_at(spec)?,
        None => FaultInjector::none(),
    };
    let mut store = Store::open(&cfg.store)?;
    if let Some(p) = cfg.problems.clone() {
        let added = import_problems(&mut store, &p)?;
        log::info!("imported {added} problems from {}", p.display());
    }
    let stages = Stages::build(&cfg)?;
    let outcome = run_round(&mut store, &stages, &cfg, &faults)?;
    print!("{}", render_table(&round_rows(store.reader())?));
    println!("{}", funnel_summary(&outcome.funnel));
    if outcome.is_partial() {
        let report = store.reader().round_dir(cfg.round).join("funnel.json");
        return Err(CliError::partial(format!(
            "round {} is partial: {} failures; rerun to resume",
            cfg.round,
            outcome.funnel.failures.len()
        ))
        .with_details(json!({ "failures": outcome.funnel.failures.len(), "report": report })));
    }
    Ok(EXIT_OK)
}

fn round_seed(reader: &StoreReader, round: u32, flag: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    Ok(reader.read_json::<RoundConfig>(round, "config.json")?.map(|c| c.seed).unwrap_or(0))
}

/// The checker the round was run with, overridden by flags.
fn round_checker(reader: &StoreReader, round: u32, flags: &CheckerArgs) -> CliResult<Arc<dyn StatementChecker>> {
    let mut spec =
        reader.read_json::<RoundConfig>(round, "config.json")?.map(|c| c.checker).unwrap_or_else(CheckerSpec::default);
    flags.apply(&mut spec)?;
    Ok(build_checker(&spec, &LauncherRegistry::default())?)
}

fn select_batch(store: &mut Store, round: u32, select: &SelectArgs) -> CliResult<ReviewBatch> {
    let strategy = ReviewRegistry::default().get(&select.strategy)?;
    let seed = round_seed(store.reader(), round, select.seed)?;
    let batch = enqueue_review(store.reader(), round, strategy.as_ref(), seed)?;
    store.write_json(round, "review_batch.json", &batch)?;
    if let Some(w) = &batch.warning {
        log::warn!("{w}");
    }
    Ok(batch)
}

fn review_enqueue(store: Option<PathBuf>, round: u32, select: &SelectArgs) -> CliResult<i32> {
    let mut store = Store::open(store_path(store))?;
    let batch = select_batch(&mut store, round, select)?;
    println!("round {round}: {} candidates selected by {} (seed {})", batch.items.len(), batch.strategy, batch.seed);
    for (tag, quota) in &batch.quota_map {
        println!("  {tag}: {quota}");
    }
    if let Some(w) = &batch.warning {
        println!("warning: {w}");
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn review_serve(
    store: Option<PathBuf>,
    round: u32,
    host: &str,
    port: u16,
    ui_dir: Option<PathBuf>,
    max_checks: usize,
    select: &SelectArgs,
    checker: &CheckerArgs,
) -> CliResult<i32> {
    let mut store = Store::open(store_path(store))?;
    if !store.reader().has_round(round) {
        return Err(CoreError::UnknownRound(round).into());
    }
    let batch = match store.reader().read_json::<ReviewBatch>(round, "review_batch.json")? {
        Some(b) => b,
        None => select_batch(&mut store, round, select)?,
    };
    let checker = round_checker(store.reader(), round, checker)?;
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| CliError::validation("invalid_argument", format!("bad address {host}:{port}: {e}")))?;
    let mut state = ApiState::new(store, round, batch, checker, max_checks);
    state.ui_dir = ui_dir;
    let server = Server::start(state, addr, true).map_err(|e| CliError::environment("bind", e.to_string()))?;
    println!("reviewing round {round} on http://{}", server.addr());
    server.wait().map_err(|e| CliError::environment("server", e.to_string()))?;
    Ok(EXIT_OK)
}

fn labels_merge(store: Option<PathBuf>, file: &Path, round: u32, checker: &CheckerArgs) -> CliResult<i32> {
    let mut store = Store::open(store_path(store))?;
    let subs = read_submissions(file)?;
    let checker = round_checker(store.reader(), round, checker)?;
    let report = merge_human_labels(&mut store, checker.as_ref(), round, &subs)?;
    print_json(&report);
    if report.rejected.is_empty() {
        return Ok(EXIT_OK);
    }
    let details = json!({ "rejected": report.rejected });
    let unavailable = report.rejected.iter().any(|r| matches!(r.reason, Rejection::CheckerUnavailable { .. }));
    let message = format!("{} of {} labels rejected", report.rejected.len(), subs.len());
    Err(if unavailable {
        CliError::environment("checker_unavailable", message)
    } else if report.applied > 0 {
        CliError::partial(message)
    } else {
        CliError::validation("labels_rejected", message)
    }
    .with_details(details))
}

fn export(store: Option<PathBuf>, rounds: Option<Vec<u32>>, out: &Path, pairs: bool) -> CliResult<i32> {
    let reader = StoreReader::open(store_path(store))?;
    let rounds = match rounds {
        Some(r) => r,
        None => reader.rounds()?,
    };
    let mut candidates: Vec<TranslationCandidate> = Vec::new();
    for r in &rounds {
        if !reader.has_round(*r) {
            return Err(CoreError::UnknownRound(*r).into());
        }
        candidates.extend(reader.load_round(*r)?);
    }
    let problems = reader.problem_index()?;
    let (written, format) = if pairs {
        // pairs carry the text the translator saw, answer included
        let rephrased: HashMap<String, Problem> =
            problems.into_iter().map(|(id, p)| (id, rephrase_answer(p))).collect();
        let accepted: Vec<TranslationCandidate> = candidates.into_iter().filter(|c| c.human.is_accepted()).collect();
        let records = export_training_pairs(&accepted, &rephrased)?;
        write_jsonl(
            out,
            &records,
            &ExportMeta { format: "pairs".into(), records: records.len(), candidates: accepted.len() },
        )?;
        (records.len(), "pairs")
    } else {
        let records = dataset_records(&candidates, &problems);
        write_jsonl(
            out,
            &records,
            &ExportMeta { format: "dataset".into(), records: records.len(), candidates: candidates.len() },
        )?;
        (records.len(), "dataset")
    };
    println!("wrote {written} {format} records to {}", out.display());
    Ok(EXIT_OK)
}

fn stats(store: Option<PathBuf>, round: Option<u32>, format: Format) -> CliResult<i32> {
    let reader = StoreReader::open(store_path(store))?;
    let rounds = match round {
        Some(r) => vec![r],
        None => reportable_rounds(&reader)?,
    };
    let reports = rounds.iter().map(|r| load_stats(&reader, *r)).collect::<CliResult<Vec<_>>>()?;
    match format {
        Format::Table => {
            let rows: Vec<_> = reports.iter().map(|r| r.row.clone()).collect();
            print!("{}", render_table(&rows));
            for r in &reports {
                println!();
                print!("{}", render_accuracy(r));
            }
        }
        Format::Json if round.is_some() => print_json(&reports[0]),
        Format::Json => print_json(&reports),
        Format::Jsonl => {
            for r in &reports {
                println!("{}", serde_json::to_string(r).expect("serializable"));
            }
        }
    }
    Ok(EXIT_OK)
}

fn mode_stages(config: &Path, checker: &CheckerArgs) -> CliResult<(RoundConfig, Stages)> {
    let mut cfg = RoundConfig::load(config)?;
    checker.apply(&mut cfg.checker)?;
    let stages = Stages::build(&cfg)?;
    Ok((cfg, stages))
}

fn imo(
    problems: &Path,
    config: &Path,
    k: u32,
    temperature: f64,
    out: Option<&Path>,
    checker: &CheckerArgs,
) -> CliResult<i32> {
    let (_, stages) = mode_stages(config, checker)?;
    let mut reports = Vec::new();
    for p in read_problems(problems)? {
        let report = imo_mode(&stages, &p, k, temperature)?;
        println!(
            "{}: {} samples, {} distinct, {} compiled, {} surviving",
            report.problem_id,
            report.samples,
            report.distinct,
            report.compiled,
            report.survivors.len()
        );
        if let Some(best) = report.survivors.first() {
            println!("  best ({} of {} samples): {}", best.frequency, report.samples, best.statement_text);
        }
        reports.push(report);
    }
    if let Some(path) = out {
        write_output(Some(path), &serde_json::to_string_pretty(&reports).expect("serializable"))?;
    }
    let errors = reports.iter().flat_map(|r| &r.ranked).filter(|s| s.error.is_some()).count();
    if errors > 0 {
        return Err(CliError::partial(format!("{errors} statements could not be fully checked")));
    }
    Ok(EXIT_OK)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProofTarget {
    Candidate(Box<TranslationCandidate>),
    Plain { id: String, statement: String },
}

fn prove(
    candidates: &Path,
    config: &Path,
    k: Option<u32>,
    temperature: f64,
    out: Option<&Path>,
    checker: &CheckerArgs,
) -> CliResult<i32> {
    let (cfg, stages) = mode_stages(config, checker)?;
    let k = k.unwrap_or(cfg.sampling.proof_k);
    let text = read_file(candidates)?;
    let mut targets = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let t: ProofTarget = serde_json::from_str(line)
            .map_err(|e| CliError::validation("invalid_input", format!("{}:{}: {e}", candidates.display(), i + 1)))?;
        match t {
            ProofTarget::Candidate(c) if c.compiled() => targets.push((c.id(), c.accepted_text().to_string())),
            ProofTarget::Candidate(c) => log::info!("skipping {}: statement did not compile", c.id()),
            ProofTarget::Plain { id, statement } => targets.push((id, statement)),
        }
    }
    let mut results = Vec::new();
    for (id, statement) in &targets {
        let r = proof_search(&stages, id, statement, k, temperature);
        match (r.winning_index, &r.error) {
            (Some(i), _) => println!("{id}: solved at attempt {i}/{k}"),
            (None, Some(e)) => println!("{id}: error after {} attempts: {e}", r.attempts),
            (None, None) => println!("{id}: unsolved after {} attempts", r.attempts),
        }
        results.push(r);
    }
    if !results.is_empty() {
        let rate = corpus_pass_rate(&results, k)?;
        println!("pass@{k}: {} ({}/{})", rate.display(), rate.solved, rate.total);
    }
    if let Some(path) = out {
        write_output(Some(path), &serde_json::to_string_pretty(&results).expect("serializable"))?;
    }
    let retry = results.iter().filter(|r| r.retryable).count();
    if retry > 0 {
        return Err(CliError::partial(format!("{retry} searches stopped on transient errors")));
    }
    Ok(EXIT_OK)
}

fn lint(file: &Path, nl: Option<&str>) -> CliResult<i32> {
    let text = read_file(file)?;
    print_json(&Linter::default().lint_document(&text, nl));
    Ok(EXIT_OK)
}

fn fix(file: &Path, out: Option<&Path>) -> CliResult<i32> {
    let text = read_file(file)?;
    let report = Linter::default().lint_document(&text, None);
    let fixed = apply_fixes(&text, &report)?;
    write_output(out, &fixed)?;
    Ok(EXIT_OK)
}

fn repl_check(file: &Path, proof: Option<&Path>, checker: &CheckerArgs) -> CliResult<i32> {
    let statement = read_file(file)?;
    let checker = checker.build()?;
    let verdict = match proof {
        Some(p) => checker.check_proof(&statement, &read_file(p)?)?,
        None => checker.check_statement(&statement)?,
    };
    print_json(&verdict);
    if !verdict.is_pass() {
        return Err(CliError::validation("compile_failed", format!("verdict {}", verdict.kind.as_str())));
    }
    Ok(EXIT_OK)
}

const DEMO_CONFIG: &str = "round = 1\nmodel_id = \"mock-translator\"\nseed = 7\nstore = \"store\"\n\n\
[backends.default]\nkind = \"mock\"\nfixtures = \"fixtures\"\n\n[gateway]\nbackoff_ms = 1\n";

fn demo(dir: &Path, n: usize) -> CliResult<i32> {
    let funnel = Workload::funnel(n);
    funnel.write_posts(&dir.join("posts"))?;
    funnel.write_mock(&dir.join("fixtures"))?;
    funnel.write_problems(&dir.join("problems.jsonl"))?;
    let imo = Workload::imo();
    imo.write_mock(&dir.join("imo/fixtures"))?;
    imo.write_problems(&dir.join("imo/problems.jsonl"))?;
    for path in [dir.join("round1.toml"), dir.join("imo/imo.toml")] {
        std::fs::write(&path, DEMO_CONFIG).map_err(|e| forge_pipeline::PipelineError::io(&path, e))?;
    }
    println!("demo workload written to {}", dir.display());
    println!("  forge ingest {0}/posts --config {0}/round1.toml", dir.display());
    println!("  forge round run --config {0}/round1.toml", dir.display());
    println!("  forge imo {0}/imo/problems.jsonl --config {0}/imo/imo.toml", dir.display());
    Ok(EXIT_OK)
}
