//! HTTP API behind the review UI.
//!
//! `GET /api/queue`, `POST /api/check`, `POST /api/verdict`, `GET /api/stats`.
//! Errors are `{code, message, details}` with a matching status. Checks run
//! on blocking threads and at most `max_checks` at a time; beyond that the
//! API answers 503 with `Retry-After` rather than queueing.

#![allow(clippy::result_large_err)]

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use forge_core::store::{Store, StoreReader};
use forge_core::{CandidateKey, CompileVerdict, HumanVerdict, LintReport, Problem, TriState};
use forge_pipeline::labels::{check_submission, refresh_manifest, validate_submission};
use forge_pipeline::{Rejection, ReviewBatch, VerdictSubmission};
use forge_repl::{ReplError, StatementChecker};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{oneshot, Semaphore};

use crate::stats::load_stats;

pub const RETRY_AFTER_S: u64 = 1;

pub struct ApiState {
    pub round: u32,
    pub store: Mutex<Store>,
    pub reader: StoreReader,
    pub checker: Arc<dyn StatementChecker>,
    pub batch: ReviewBatch,
    pub checks: Arc<Semaphore>,
    pub ui_dir: Option<PathBuf>,
}

impl ApiState {
    pub fn new(
        store: Store,
        round: u32,
        batch: ReviewBatch,
        checker: Arc<dyn StatementChecker>,
        max_checks: usize,
    ) -> Self {
        ApiState {
            round,
            reader: store.reader().clone(),
            store: Mutex::new(store),
            checker,
            batch,
            checks: Arc::new(Semaphore::new(max_checks.max(1))),
            ui_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueItem {
    pub candidate_id: String,
    pub statement_text: String,
    pub problem: Option<Problem>,
    pub lint: LintReport,
    pub compile: Option<CompileVerdict>,
    pub back_translation: Option<String>,
    pub nli: TriState,
    pub fingerprint: String,
    /// Human verdicts from earlier rounds on statements with the same
    /// fingerprint.
    pub prior_verdicts: Vec<PriorVerdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorVerdict {
    pub candidate_id: String,
    pub verdict: HumanVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRequest {
    pub statement_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictResponse {
    pub candidate_id: String,
    pub verdict: HumanVerdict,
    pub human_labels_total: u64,
    pub pending: usize,
}

#[derive(Debug, Deserialize)]
struct RoundQuery {
    round: Option<u32>,
}

fn error(status: StatusCode, code: &str, message: impl Into<String>, details: Value) -> Response {
    (status, Json(json!({ "code": code, "message": message.into(), "details": details }))).into_response()
}

fn busy(message: impl Into<String>) -> Response {
    let mut r = error(StatusCode::SERVICE_UNAVAILABLE, "checker_busy", message, Value::Null);
    r.headers_mut().insert(header::RETRY_AFTER, RETRY_AFTER_S.into());
    r
}

fn internal(e: impl std::fmt::Display) -> Response {
    error(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string(), Value::Null)
}

fn wrong_round(state: &ApiState, asked: Option<u32>) -> Option<Response> {
    match asked {
        Some(r) if r != state.round => Some(error(
            StatusCode::NOT_FOUND,
            "unknown_round",
            format!("this server reviews round {}, not {r}", state.round),
            json!({ "round": state.round }),
        )),
        _ => None,
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, Response> {
    serde_json::from_slice(body).map_err(|e| {
        error(
            StatusCode::BAD_REQUEST,
            "malformed",
            format!("request body: {e}"),
            json!({ "line": e.line(), "column": e.column() }),
        )
    })
}

fn prior_verdicts(state: &ApiState) -> Result<HashMap<String, Vec<PriorVerdict>>, forge_core::CoreError> {
    let mut prior: HashMap<String, Vec<PriorVerdict>> = HashMap::new();
    for r in state.reader.rounds()?.into_iter().filter(|r| *r < state.round) {
        for c in state.reader.load_round(r)?.into_iter().filter(|c| c.human != HumanVerdict::Unreviewed) {
            prior
                .entry(c.fingerprint.clone())
                .or_default()
                .push(PriorVerdict { candidate_id: c.id(), verdict: c.human });
        }
    }
    Ok(prior)
}

/// Batch items that have no human verdict yet, in batch order.
fn pending(state: &ApiState) -> Result<Vec<QueueItem>, forge_core::CoreError> {
    let candidates: HashMap<String, forge_core::TranslationCandidate> =
        state.reader.load_round(state.round)?.into_iter().map(|c| (c.id(), c)).collect();
    let problems = state.reader.problem_index()?;
    let prior = prior_verdicts(state)?;
    Ok(state
        .batch
        .items
        .iter()
        .filter_map(|id| candidates.get(id))
        .filter(|c| c.human == HumanVerdict::Unreviewed)
        .map(|c| QueueItem {
            candidate_id: c.id(),
            statement_text: c.statement_text.clone(),
            problem: problems.get(&c.problem_id).cloned(),
            lint: c.lint.clone(),
            compile: c.compile.clone(),
            back_translation: c.back_translation.clone(),
            nli: c.nli,
            fingerprint: c.fingerprint.clone(),
            prior_verdicts: prior.get(&c.fingerprint).cloned().unwrap_or_default(),
        })
        .collect())
}

async fn queue(State(state): State<Arc<ApiState>>, Query(q): Query<RoundQuery>) -> Response {
    if let Some(r) = wrong_round(&state, q.round) {
        return r;
    }
    match tokio::task::spawn_blocking(move || pending(&state)).await {
        Ok(Ok(items)) => Json(items).into_response(),
        Ok(Err(e)) => internal(e),
        Err(e) => internal(e),
    }
}

async fn check(State(state): State<Arc<ApiState>>, body: Bytes) -> Response {
    let req: CheckRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(r) => return r,
    };
    if req.statement_text.trim().is_empty() {
        return error(
            StatusCode::BAD_REQUEST,
            "invalid",
            "statement_text is empty",
            json!({ "field": "statement_text" }),
        );
    }
    let Ok(permit) = state.checks.clone().try_acquire_owned() else {
        return busy("all checker slots are in use");
    };
    let checker = state.checker.clone();
    let result = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        checker.check_statement(&req.statement_text)
    })
    .await;
    match result {
        Ok(Ok(verdict)) => Json(verdict).into_response(),
        Ok(Err(ReplError::Busy)) => busy("checker queue is full"),
        Ok(Err(e)) => error(StatusCode::SERVICE_UNAVAILABLE, "checker_unavailable", e.to_string(), Value::Null),
        Err(e) => internal(e),
    }
}

fn record_verdict(state: &ApiState, sub: &VerdictSubmission) -> Result<VerdictResponse, Response> {
    let candidate =
        state.reader.load_round(state.round).map_err(internal)?.into_iter().find(|c| c.id() == sub.candidate_id);
    let label = check_submission(candidate.as_ref(), state.checker.as_ref(), sub).map_err(|r| match r {
        Rejection::UnknownCandidate => error(
            StatusCode::NOT_FOUND,
            "unknown_candidate",
            format!("no candidate {} in round {}", sub.candidate_id, state.round),
            Value::Null,
        ),
        Rejection::Invalid { message } => error(StatusCode::BAD_REQUEST, "invalid", message, Value::Null),
        Rejection::CompileFailed { verdict } => error(
            StatusCode::UNPROCESSABLE_ENTITY,
            "compile_failed",
            format!("edited statement does not compile: {}", verdict.kind.as_str()),
            serde_json::to_value(&verdict).unwrap_or(Value::Null),
        ),
        Rejection::CheckerUnavailable { message } => {
            let mut r = error(StatusCode::SERVICE_UNAVAILABLE, "checker_unavailable", message, Value::Null);
            r.headers_mut().insert(header::RETRY_AFTER, RETRY_AFTER_S.into());
            r
        }
    })?;
    let total = {
        let mut store = state.store.lock().map_err(|_| internal("store lock poisoned"))?;
        store.append_label(state.round, &label).map_err(internal)?;
        refresh_manifest(&mut store, state.round).map_err(internal)?
    };
    let pending = pending(state).map_err(internal)?.len();
    Ok(VerdictResponse { candidate_id: label.candidate_id, verdict: label.verdict, human_labels_total: total, pending })
}

async fn verdict(State(state): State<Arc<ApiState>>, body: Bytes) -> Response {
    let sub: VerdictSubmission = match parse_body(&body) {
        Ok(s) => s,
        Err(r) => return r,
    };
    if let Err(message) = validate_submission(&sub) {
        return error(StatusCode::BAD_REQUEST, "invalid", message, Value::Null);
    }
    if let Ok(key) = sub.candidate_id.parse::<CandidateKey>() {
        if key.round != state.round {
            return error(
                StatusCode::NOT_FOUND,
                "unknown_candidate",
                format!("candidate {} is not in round {}", sub.candidate_id, state.round),
                Value::Null,
            );
        }
    }
    // an edit needs the checker; take a slot before touching anything
    let permit = match &sub.modified_text {
        Some(_) => match state.checks.clone().try_acquire_owned() {
            Ok(p) => Some(p),
            Err(_) => return busy("all checker slots are in use"),
        },
        None => None,
    };
    let result = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        record_verdict(&state, &sub)
    })
    .await;
    match result {
        Ok(Ok(resp)) => Json(resp).into_response(),
        Ok(Err(r)) => r,
        Err(e) => internal(e),
    }
}

async fn stats(State(state): State<Arc<ApiState>>, Query(q): Query<RoundQuery>) -> Response {
    if let Some(r) = wrong_round(&state, q.round) {
        return r;
    }
    match tokio::task::spawn_blocking(move || load_stats(&state.reader, state.round)).await {
        Ok(Ok(report)) => Json(report).into_response(),
        Ok(Err(e)) => error(StatusCode::NOT_FOUND, &e.code, e.message, e.details),
        Err(e) => internal(e),
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

/// Serves the built UI; unknown paths fall back to `index.html`.
async fn static_file(State(state): State<Arc<ApiState>>, uri: Uri) -> Response {
    let Some(root) = state.ui_dir.clone() else {
        return error(StatusCode::NOT_FOUND, "not_found", format!("no route for {}", uri.path()), Value::Null);
    };
    let rel = Path::new(uri.path().trim_start_matches('/'));
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return error(StatusCode::BAD_REQUEST, "invalid", "bad path", Value::Null);
    }
    let mut path = root.join(rel);
    if uri.path().starts_with("/api/") {
        return error(StatusCode::NOT_FOUND, "not_found", format!("no route for {}", uri.path()), Value::Null);
    }
    if !path.is_file() {
        path = root.join("index.html");
    }
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => error(StatusCode::NOT_FOUND, "not_found", format!("no file for {}", uri.path()), Value::Null),
    }
}

pub fn router(state: Arc<ApiState>) -> Router {
    Router::new()
        .route("/api/queue", get(queue))
        .route("/api/check", post(check))
        .route("/api/verdict", post(verdict))
        .route("/api/stats", get(stats))
        .fallback(static_file)
        .with_state(state)
}

/// A server running on its own thread and runtime.
pub struct Server {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<std::io::Result<()>>>,
}

impl Server {
    pub fn start(state: ApiState, addr: SocketAddr, stop_on_ctrl_c: bool) -> std::io::Result<Server> {
        let listener = std::net::TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let (tx, rx) = oneshot::channel::<()>();
        let app = router(Arc::new(state));
        let thread = std::thread::Builder::new().name("forge-api".into()).spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener)?;
                let stop = async move {
                    if stop_on_ctrl_c {
                        tokio::select! {
                            _ = rx => {}
                            _ = tokio::signal::ctrl_c() => {}
                        }
                    } else {
                        let _ = rx.await;
                    }
                };
                axum::serve(listener, app).with_graceful_shutdown(stop).await
            })
        })?;
        Ok(Server { addr, shutdown: Some(tx), thread: Some(thread) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks until the server exits on its own (for instance on ctrl-c).
    pub fn wait(mut self) -> std::io::Result<()> {
        let thread = self.thread.take().expect("joined once");
        let result = thread.join().unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked")));
        self.shutdown.take();
        result
    }

    /// Stops accepting requests, lets in-flight ones finish and releases
    /// the store.
    pub fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.wait()
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
