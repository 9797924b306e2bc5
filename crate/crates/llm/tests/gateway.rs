use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use forge_llm::{
    BackendRegistry, BackendSpec, ChatBackend, ChatRequest, EchoBackend, Gateway, GatewayConfig, LlmError, MockBackend,
    MockEntry, PromptId, PromptRegistry, Verdict,
};

fn config() -> GatewayConfig {
    GatewayConfig { backoff_ms: 1, ..Default::default() }
}

fn gateway(backend: Arc<dyn ChatBackend>) -> Gateway {
    Gateway::new(backend, Arc::new(PromptRegistry::default()), config())
}

fn entry(prompt: PromptId, key: &str, responses: &[&str], fail_times: u32) -> MockEntry {
    MockEntry {
        prompt,
        key: Some(key.into()),
        contains: None,
        responses: responses.iter().map(|s| s.to_string()).collect(),
        fail_times,
    }
}

#[test]
fn transport_failures_are_retried_twice() {
    let g = gateway(Arc::new(MockBackend::new(vec![entry(PromptId::Fl2nl, "p", &["back"], 2)])));
    assert_eq!(g.back_translate(&["p"], "theorem t : True := by sorry").unwrap(), "back");
    assert_eq!(g.requests(), 3);

    let g = gateway(Arc::new(MockBackend::new(vec![entry(PromptId::Fl2nl, "p", &["back"], 3)])));
    let err = g.back_translate(&["p"], "theorem t : True := by sorry").unwrap_err();
    assert!(err.is_retryable());
    assert_eq!(g.requests(), 3);
}

#[test]
fn indeterminate_judgement_is_retried_once() {
    let g = gateway(Arc::new(MockBackend::new(vec![
        entry(PromptId::Nli, "a", &["hmm, unclear", "They match. **same**"], 0),
        entry(PromptId::Nli, "b", &["no idea"], 0),
    ])));
    let v = g.judge_nli(&["a"], "x", "y").unwrap();
    assert_eq!(v.value, Verdict::Positive);
    assert_eq!(v.raw, "They match. **same**");
    assert_eq!(g.requests(), 2);
    assert_eq!(g.judge_nli(&["b"], "x", "y").unwrap().value, Verdict::Indeterminate);
    assert_eq!(g.requests(), 4);
}

#[test]
fn well_defined_last_marker_wins() {
    let g = gateway(Arc::new(MockBackend::new(vec![
        entry(PromptId::WellDefined, "p1", &["All variables are defined. **well-defined**"], 0),
        entry(PromptId::WellDefined, "p2", &["At first **well-defined**, but x is unbound: **ill-defined**"], 0),
    ])));
    assert_eq!(g.judge_well_defined("p1", "Find x.").unwrap().value, Verdict::Positive);
    assert_eq!(g.judge_well_defined("p2", "Find x.").unwrap().value, Verdict::Negative);
}

#[test]
fn recorded_extraction_response() {
    let raw = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/llm/extract_response.txt"))
        .unwrap();
    let g = gateway(Arc::new(MockBackend::new(vec![entry(PromptId::Extract, "post-1", &[&raw], 0)])));
    let drafts = g.extract_problems("post-1", "a long discussion").unwrap();
    assert_eq!(drafts.len(), 2);
    assert_eq!(drafts[0].answer, None);
    assert_eq!(drafts[0].tags, vec!["inequality", "algebra"]);
    assert!(drafts[0].problem.contains("\\ge"));
    assert_eq!(drafts[1].answer.as_deref(), Some("2"));
    assert!(matches!(g.extract_problems("post-1", "  "), Err(LlmError::Invalid(_))));
}

#[test]
fn translation_returns_n_completions() {
    let g = gateway(Arc::new(MockBackend::new(vec![entry(PromptId::Nl2fl, "imo", &["s1", "s2", "s3"], 0)])));
    let out = g.translate("imo", "Prove something.", 100, 0.7).unwrap();
    assert_eq!(out.len(), 100);
    assert_eq!(&out[..4], &["s1", "s2", "s3", "s1"]);
    assert_eq!(g.translate("imo", "Prove something.", 1, 0.0).unwrap().len(), 1);
    assert!(g.translate("imo", "Prove something.", 0, 0.0).is_err());
}

#[test]
fn echo_judges_identical_texts_the_same() {
    let g = gateway(Arc::new(EchoBackend));
    assert_eq!(g.judge_nli(&[], "Show 1 < 2.", "Show 1 < 2.").unwrap().value, Verdict::Positive);
    assert_eq!(g.judge_nli(&[], "Show 1 < 2.", "Show 2 < 1.").unwrap().value, Verdict::Negative);
}

#[derive(Debug, Default)]
struct Slow {
    in_flight: AtomicUsize,
    peak: AtomicUsize,
}

impl ChatBackend for Slow {
    fn kind(&self) -> &'static str {
        "slow"
    }

    fn complete(&self, req: &ChatRequest) -> Result<Vec<String>, LlmError> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        std::thread::sleep(Duration::from_millis(30));
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        Ok(vec!["**same**".into(); req.n as usize])
    }
}

#[test]
fn concurrency_is_capped() {
    let slow = Arc::new(Slow::default());
    let g = Arc::new(Gateway::new(
        slow.clone(),
        Arc::new(PromptRegistry::default()),
        GatewayConfig { max_concurrency: 2, ..config() },
    ));
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let g = Arc::clone(&g);
            std::thread::spawn(move || g.judge_nli(&[], "a", "b").unwrap())
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    assert_eq!(slow.peak.load(Ordering::SeqCst), 2);
}

#[test]
fn mock_fixture_directory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("nli.jsonl"),
        "{\"prompt\":\"nli\",\"key\":\"*\",\"responses\":[\"**different**\"]}\n\n{\"prompt\":\"nli\",\"key\":\"p1\",\"responses\":[\"**same**\"]}\n",
    )
    .unwrap();
    let mut spec = BackendSpec::of_kind("mock");
    spec.fixtures = Some(dir.path().to_path_buf());
    let g = gateway(BackendRegistry::default().build(&spec).unwrap());
    assert_eq!(g.judge_nli(&["p1"], "a", "b").unwrap().value, Verdict::Positive);
    assert_eq!(g.judge_nli(&["p2"], "a", "b").unwrap().value, Verdict::Negative);

    std::fs::write(dir.path().join("bad.jsonl"), "{\"prompt\":\"nope\"}\n").unwrap();
    assert!(matches!(BackendRegistry::default().build(&spec), Err(LlmError::Config(_))));
}

/// Requests seen by the stub, as `(headers, body)`.
type Seen = Arc<Mutex<Vec<(String, String)>>>;

/// A one-thread HTTP server answering with queued `(status, body)` pairs
/// and recording each request.
fn stub_server(replies: Vec<(u16, String)>) -> (String, Seen) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    std::thread::spawn(move || {
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut headers = String::new();
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                headers.push_str(&line);
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push((headers, String::from_utf8(buf).unwrap()));
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

fn choices(texts: &[&str]) -> String {
    let cs: Vec<_> =
        texts.iter().map(|t| serde_json::json!({"message": {"role": "assistant", "content": t}})).collect();
    serde_json::json!({ "choices": cs }).to_string()
}

#[test]
fn http_backend_speaks_chat_completions() {
    let (url, seen) = stub_server(vec![
        (500, "{\"error\":\"overloaded\"}".into()),
        (200, choices(&["first"])),
        (200, choices(&["second"])),
    ]);
    std::env::set_var("FORGE_TEST_HTTP_KEY", "sk-test-secret");
    let mut spec = BackendSpec::of_kind("http");
    spec.base_url = Some(url);
    spec.model = Some("judge-14b".into());
    spec.api_key_env = Some("FORGE_TEST_HTTP_KEY".into());
    spec.timeout_s = 5.0;
    spec.trace = true;
    let g = gateway(BackendRegistry::default().build(&spec).unwrap());
    let out = g.translate("p", "Prove 1 < 2.", 2, 0.7).unwrap();
    assert_eq!(out, vec!["first", "second"]);

    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 3);
    let (headers, body) = &seen[1];
    assert!(headers.starts_with("POST /v1/chat/completions"));
    assert!(headers.to_ascii_lowercase().contains("authorization: bearer sk-test-secret"));
    let body: serde_json::Value = serde_json::from_str(body).unwrap();
    assert_eq!(body["model"], "judge-14b");
    assert_eq!(body["n"], 2);
    assert_eq!(body["temperature"], 0.7);
    assert!(body["messages"][0]["content"].as_str().unwrap().ends_with("Prove 1 < 2."));
    assert_eq!(serde_json::from_str::<serde_json::Value>(&seen[2].1).unwrap()["n"], 1);
}

#[test]
fn http_client_errors_are_not_retried() {
    let (url, seen) = stub_server(vec![(400, "{\"error\":\"bad request\"}".into())]);
    let mut spec = BackendSpec::of_kind("http");
    spec.base_url = Some(url);
    spec.model = Some("m".into());
    spec.timeout_s = 5.0;
    let g = gateway(BackendRegistry::default().build(&spec).unwrap());
    match g.back_translate(&["p"], "theorem t : True := by sorry") {
        Err(LlmError::Http { status: 400, .. }) => {}
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(seen.lock().unwrap().len(), 1);
}
