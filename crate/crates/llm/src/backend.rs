//! Chat-completion backends.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::LlmError;
use crate::prompts::PromptId;

/// One rendered prompt, plus what a fixture backend needs to find its reply.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub prompt_id: PromptId,
    pub prompt: String,
    /// The placeholder values the prompt was rendered from.
    pub vars: BTreeMap<String, String>,
    pub n: u32,
    pub temperature: f64,
    /// Lookup keys, most specific first (candidate id, then problem id).
    pub keys: Vec<String>,
}

pub trait ChatBackend: Send + Sync + std::fmt::Debug {
    fn kind(&self) -> &'static str;
    /// Returns exactly `req.n` completions.
    fn complete(&self, req: &ChatRequest) -> Result<Vec<String>, LlmError>;
}

/// A scripted reply. `key` matches a request key exactly, `contains` matches
/// a substring of the rendered prompt, `*` matches anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockEntry {
    pub prompt: PromptId,
    #[serde(default)]
    pub key: Option<String>,
    #[serde(default)]
    pub contains: Option<String>,
    pub responses: Vec<String>,
    /// The first this-many calls fail with a transport error.
    #[serde(default)]
    pub fail_times: u32,
}

#[derive(Debug, Default)]
struct MockState {
    failures: HashMap<usize, u32>,
    cursor: HashMap<usize, usize>,
}

/// Replays keyed fixture responses. Each entry hands out its responses in
/// order, wrapping around.
#[derive(Debug, Default)]
pub struct MockBackend {
    entries: Vec<MockEntry>,
    state: Mutex<MockState>,
}

impl MockBackend {
    pub fn new(entries: Vec<MockEntry>) -> Self {
        MockBackend { entries, state: Mutex::default() }
    }

    /// Reads every `*.jsonl` file in `dir`, one entry per line, in file name
    /// order.
    pub fn load(dir: &Path) -> Result<Self, LlmError> {
        let io = |source| LlmError::Io { path: dir.to_path_buf(), source };
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        files.sort();
        let mut entries = Vec::new();
        for path in files {
            let text = std::fs::read_to_string(&path).map_err(|source| LlmError::Io { path: path.clone(), source })?;
            for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let entry: MockEntry = serde_json::from_str(line)
                    .map_err(|e| LlmError::Config(format!("{}:{}: {e}", path.display(), n + 1)))?;
                if entry.responses.is_empty() {
                    return Err(LlmError::Config(format!("{}:{}: no responses", path.display(), n + 1)));
                }
                entries.push(entry);
            }
        }
        Ok(MockBackend::new(entries))
    }

    fn find(&self, req: &ChatRequest) -> Option<usize> {
        let of_prompt = || self.entries.iter().enumerate().filter(|(_, e)| e.prompt == req.prompt_id);
        req.keys
            .iter()
            .find_map(|k| of_prompt().find(|(_, e)| e.key.as_deref() == Some(k.as_str())).map(|(i, _)| i))
            .or_else(|| {
                of_prompt().find(|(_, e)| e.contains.as_deref().is_some_and(|s| req.prompt.contains(s))).map(|(i, _)| i)
            })
            .or_else(|| of_prompt().find(|(_, e)| e.key.as_deref() == Some("*")).map(|(i, _)| i))
    }
}

impl ChatBackend for MockBackend {
    fn kind(&self) -> &'static str {
        "mock"
    }

    fn complete(&self, req: &ChatRequest) -> Result<Vec<String>, LlmError> {
        let idx = self.find(req).ok_or_else(|| LlmError::NoFixture {
            prompt: req.prompt_id.to_string(),
            key: req.keys.first().cloned().unwrap_or_default(),
        })?;
        let entry = &self.entries[idx];
        let mut state = self.state.lock().expect("mock state");
        let failed = state.failures.entry(idx).or_default();
        if *failed < entry.fail_times {
            *failed += 1;
            return Err(LlmError::Transport(format!("scripted failure {} of {}", *failed, entry.fail_times)));
        }
        let cursor = state.cursor.entry(idx).or_default();
        let out = (0..req.n as usize).map(|j| entry.responses[(*cursor + j) % entry.responses.len()].clone()).collect();
        *cursor += req.n as usize;
        Ok(out)
    }
}

/// Answers from the request itself: judges say yes, translators return
/// their input, and the NLI judge says `same` exactly when both texts agree.
#[derive(Debug, Default, Clone, Copy)]
pub struct EchoBackend;

impl ChatBackend for EchoBackend {
    fn kind(&self) -> &'static str {
        "echo"
    }

    fn complete(&self, req: &ChatRequest) -> Result<Vec<String>, LlmError> {
        let var = |name: &str| req.vars.get(name).map(String::as_str).unwrap_or_default();
        let reply = match req.prompt_id {
            PromptId::Extract => json!([{ "problem": var("post").trim(), "answer": "", "tags": [] }]).to_string(),
            PromptId::WellDefined => "**well-defined**".to_string(),
            PromptId::Nli => {
                let same = var("original").trim() == var("back_translated").trim();
                if same { "**same**" } else { "**different**" }.to_string()
            }
            PromptId::Nl2fl => var("problem").to_string(),
            PromptId::Fl2nl | PromptId::Prove => var("statement").to_string(),
        };
        Ok(vec![reply; req.n as usize])
    }
}

/// An OpenAI-style `/chat/completions` endpoint.
#[derive(Debug)]
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    url: String,
    model: String,
    api_key: Option<String>,
    trace: bool,
}

pub fn redact(header: &str) -> String {
    match header.split_once(' ') {
        Some((scheme, _)) => format!("{scheme} ***"),
        None => "***".to_string(),
    }
}

impl HttpBackend {
    pub fn new(spec: &BackendSpec) -> Result<Self, LlmError> {
        let base = spec.base_url.as_deref().ok_or_else(|| LlmError::Config("http backend needs base_url".into()))?;
        let model = spec.model.clone().ok_or_else(|| LlmError::Config("http backend needs model".into()))?;
        let api_key = match &spec.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| LlmError::MissingApiKey(var.clone()))?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(spec.timeout_s))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(HttpBackend {
            client,
            url: format!("{}/chat/completions", base.trim_end_matches('/')),
            model,
            api_key,
            trace: spec.trace,
        })
    }

    fn call(&self, req: &ChatRequest, n: u32) -> Result<Vec<String>, LlmError> {
        let body = json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": req.prompt }],
            "n": n,
            "temperature": req.temperature,
        });
        let auth = self.api_key.as_ref().map(|k| format!("Bearer {k}"));
        if self.trace {
            log::info!(
                "POST {} authorization={} body={}",
                self.url,
                auth.as_deref().map(redact).unwrap_or_else(|| "none".into()),
                body
            );
        }
        let mut builder = self.client.post(&self.url).json(&body);
        if let Some(a) = &auth {
            builder = builder.header(reqwest::header::AUTHORIZATION, a);
        }
        let resp = builder.send().map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| LlmError::Transport(e.to_string()))?;
        if self.trace {
            log::info!("response {status} body={text}");
        }
        if !(200..300).contains(&status) {
            return Err(LlmError::Http { status, body: text });
        }
        let value: Value =
            serde_json::from_str(&text).map_err(|e| LlmError::Transport(format!("malformed response: {e}")))?;
        let choices = value["choices"]
            .as_array()
            .ok_or_else(|| LlmError::Transport("response has no choices".into()))?
            .iter()
            .map(|c| c["message"]["content"].as_str().unwrap_or_default().to_string())
            .collect();
        Ok(choices)
    }
}

impl ChatBackend for HttpBackend {
    fn kind(&self) -> &'static str {
        "http"
    }

    /// Servers that ignore `n` return one choice; the rest are requested
    /// one call at a time.
    fn complete(&self, req: &ChatRequest) -> Result<Vec<String>, LlmError> {
        let mut out = self.call(req, req.n)?;
        while out.len() < req.n as usize {
            let more = self.call(req, 1)?;
            if more.is_empty() {
                return Err(LlmError::Transport("server returned no choices".into()));
            }
            out.extend(more);
        }
        out.truncate(req.n as usize);
        Ok(out)
    }
}

fn default_timeout() -> f64 {
    120.0
}

/// Backend selection as written in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub kind: String,
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// Fixture directory for the mock backend.
    #[serde(default)]
    pub fixtures: Option<PathBuf>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default)]
    pub trace: bool,
}

impl BackendSpec {
    pub fn of_kind(kind: &str) -> Self {
        BackendSpec {
            kind: kind.to_string(),
            base_url: None,
            model: None,
            api_key_env: None,
            fixtures: None,
            timeout_s: default_timeout(),
            trace: false,
        }
    }
}

type Factory = fn(&BackendSpec) -> Result<Arc<dyn ChatBackend>, LlmError>;

/// Backend constructors by kind name.
#[derive(Clone)]
pub struct BackendRegistry {
    factories: BTreeMap<String, Factory>,
}

impl std::fmt::Debug for BackendRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl Default for BackendRegistry {
    fn default() -> Self {
        let mut r = BackendRegistry { factories: BTreeMap::new() };
        r.register("mock", |spec| {
            let dir = spec.fixtures.as_deref().ok_or_else(|| LlmError::Config("mock backend needs fixtures".into()))?;
            Ok(Arc::new(MockBackend::load(dir)?))
        });
        r.register("echo", |_| Ok(Arc::new(EchoBackend)));
        r.register("http", |spec| Ok(Arc::new(HttpBackend::new(spec)?)));
        r
    }
}

impl BackendRegistry {
    pub fn register(&mut self, kind: &str, factory: Factory) {
        self.factories.insert(kind.to_string(), factory);
    }

    pub fn kinds(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn build(&self, spec: &BackendSpec) -> Result<Arc<dyn ChatBackend>, LlmError> {
        let f = self.factories.get(&spec.kind).ok_or_else(|| LlmError::UnknownBackend(spec.kind.clone()))?;
        f(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(prompt_id: PromptId, keys: &[&str], prompt: &str, n: u32) -> ChatRequest {
        ChatRequest {
            prompt_id,
            prompt: prompt.into(),
            vars: BTreeMap::new(),
            n,
            temperature: 0.0,
            keys: keys.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn entry(prompt: PromptId, key: Option<&str>, contains: Option<&str>, responses: &[&str]) -> MockEntry {
        MockEntry {
            prompt,
            key: key.map(Into::into),
            contains: contains.map(Into::into),
            responses: responses.iter().map(|s| s.to_string()).collect(),
            fail_times: 0,
        }
    }

    #[test]
    fn mock_lookup_order() {
        let m = MockBackend::new(vec![
            entry(PromptId::Nli, Some("*"), None, &["default"]),
            entry(PromptId::Nli, None, Some("needle"), &["substring"]),
            entry(PromptId::Nli, Some("p1"), None, &["exact"]),
        ]);
        assert_eq!(m.complete(&req(PromptId::Nli, &["c1", "p1"], "needle", 1)).unwrap(), vec!["exact"]);
        assert_eq!(m.complete(&req(PromptId::Nli, &["p2"], "a needle", 1)).unwrap(), vec!["substring"]);
        assert_eq!(m.complete(&req(PromptId::Nli, &["p2"], "hay", 1)).unwrap(), vec!["default"]);
        assert!(matches!(m.complete(&req(PromptId::Fl2nl, &["p2"], "hay", 1)), Err(LlmError::NoFixture { .. })));
    }

    #[test]
    fn mock_cycles_and_fails_on_script() {
        let mut e = entry(PromptId::Nl2fl, Some("p"), None, &["a", "b", "c"]);
        e.fail_times = 1;
        let m = MockBackend::new(vec![e]);
        assert!(m.complete(&req(PromptId::Nl2fl, &["p"], "", 2)).unwrap_err().is_retryable());
        assert_eq!(m.complete(&req(PromptId::Nl2fl, &["p"], "", 2)).unwrap(), vec!["a", "b"]);
        assert_eq!(m.complete(&req(PromptId::Nl2fl, &["p"], "", 2)).unwrap(), vec!["c", "a"]);
    }

    #[test]
    fn echo_nli_is_reflexive() {
        let mut r = req(PromptId::Nli, &[], "", 1);
        r.vars.insert("original".into(), "Show 1 < 2.".into());
        r.vars.insert("back_translated".into(), "Show 1 < 2.".into());
        assert_eq!(EchoBackend.complete(&r).unwrap(), vec!["**same**"]);
        r.vars.insert("back_translated".into(), "Show 2 < 1.".into());
        assert_eq!(EchoBackend.complete(&r).unwrap(), vec!["**different**"]);
    }

    #[test]
    fn redaction_hides_secret() {
        assert_eq!(redact("Bearer sk-secret"), "Bearer ***");
        assert_eq!(redact("sk-secret"), "***");
    }

    #[test]
    fn registry_kinds() {
        let r = BackendRegistry::default();
        assert_eq!(r.kinds(), vec!["echo", "http", "mock"]);
        assert!(matches!(r.build(&BackendSpec::of_kind("gpt")), Err(LlmError::UnknownBackend(_))));
        assert!(matches!(r.build(&BackendSpec::of_kind("mock")), Err(LlmError::Config(_))));
        let mut http = BackendSpec::of_kind("http");
        http.base_url = Some("http://127.0.0.1:9".into());
        http.model = Some("m".into());
        http.api_key_env = Some("FORGE_TEST_SURELY_UNSET_KEY".into());
        assert!(matches!(r.build(&http), Err(LlmError::MissingApiKey(_))));
    }
}
