use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use crossbeam_channel::{bounded, Receiver, Sender};
use serde::{Deserialize, Serialize};

use crate::backend::{ChatBackend, ChatRequest};
use crate::error::LlmError;
use crate::parse::{parse_bold_verdict, parse_extraction_json, ProblemDraft, TriVerdict, Verdict};
use crate::prompts::{PromptId, PromptRegistry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    /// Requests in flight at once, across all threads sharing the gateway.
    pub max_concurrency: usize,
    /// Extra attempts after a transport failure.
    pub max_retries: u32,
    /// First backoff; doubled on every further attempt.
    pub backoff_ms: u64,
    /// Extra attempts when a judge gives no recognizable verdict.
    pub indeterminate_retries: u32,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig { max_concurrency: 8, max_retries: 2, backoff_ms: 200, indeterminate_retries: 1 }
    }
}

/// A backend plus the prompts, retry policy and concurrency cap every
/// stage call goes through.
pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
    prompts: Arc<PromptRegistry>,
    config: GatewayConfig,
    permits: (Sender<()>, Receiver<()>),
    requests: AtomicU64,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").field("backend", &self.backend).field("config", &self.config).finish()
    }
}

struct Permit<'a>(&'a Receiver<()>);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let _ = self.0.recv();
    }
}

fn non_empty(what: &str, text: &str) -> Result<(), LlmError> {
    if text.trim().is_empty() {
        return Err(LlmError::Invalid(format!("{what} is empty")));
    }
    Ok(())
}

impl Gateway {
    pub fn new(backend: Arc<dyn ChatBackend>, prompts: Arc<PromptRegistry>, config: GatewayConfig) -> Self {
        let cap = config.max_concurrency.max(1);
        Gateway { backend, prompts, config, permits: bounded(cap), requests: AtomicU64::new(0) }
    }

    pub fn backend(&self) -> &Arc<dyn ChatBackend> {
        &self.backend
    }

    pub fn prompts(&self) -> &PromptRegistry {
        &self.prompts
    }

    /// Backend calls made so far, retries included.
    pub fn requests(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    fn acquire(&self) -> Permit<'_> {
        self.permits.0.send(()).expect("permit channel is owned by self");
        Permit(&self.permits.1)
    }

    /// Renders `id` and calls the backend, retrying transport failures.
    pub fn call(
        &self,
        id: PromptId,
        vars: &[(&str, &str)],
        n: u32,
        temperature: f64,
        keys: &[&str],
    ) -> Result<Vec<String>, LlmError> {
        let req = ChatRequest {
            prompt_id: id,
            prompt: self.prompts.render(id, vars)?,
            vars: vars.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect::<BTreeMap<_, _>>(),
            n,
            temperature,
            keys: keys.iter().map(|k| k.to_string()).collect(),
        };
        let mut attempt = 0;
        loop {
            let result = {
                let _permit = self.acquire();
                self.requests.fetch_add(1, Ordering::Relaxed);
                self.backend.complete(&req)
            };
            match result {
                Ok(out) if out.len() == n as usize => return Ok(out),
                Ok(out) => {
                    return Err(LlmError::Transport(format!("backend returned {} completions, wanted {n}", out.len())))
                }
                Err(e) if e.is_retryable() && attempt < self.config.max_retries => {
                    let wait = self.config.backoff_ms << attempt;
                    log::warn!("{id} attempt {} failed ({e}); retrying in {wait} ms", attempt + 1);
                    std::thread::sleep(Duration::from_millis(wait));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn judge(
        &self,
        id: PromptId,
        vars: &[(&str, &str)],
        keys: &[&str],
        markers: (&str, &str),
    ) -> Result<TriVerdict, LlmError> {
        let mut tries = 0;
        loop {
            let raw = self.call(id, vars, 1, 0.0, keys)?.remove(0);
            let value = parse_bold_verdict(&raw, markers.0, markers.1);
            if value != Verdict::Indeterminate || tries >= self.config.indeterminate_retries {
                return Ok(TriVerdict { value, raw });
            }
            tries += 1;
        }
    }

    pub fn extract_problems(&self, key: &str, post: &str) -> Result<Vec<ProblemDraft>, LlmError> {
        non_empty("post", post)?;
        let raw = self.call(PromptId::Extract, &[("post", post)], 1, 0.0, &[key])?.remove(0);
        parse_extraction_json(&raw)
    }

    pub fn judge_well_defined(&self, key: &str, problem: &str) -> Result<TriVerdict, LlmError> {
        non_empty("problem", problem)?;
        self.judge(PromptId::WellDefined, &[("problem", problem)], &[key], ("well-defined", "ill-defined"))
    }

    /// `n` raw completions; normalization is left to the caller.
    pub fn translate(&self, key: &str, problem: &str, n: u32, temperature: f64) -> Result<Vec<String>, LlmError> {
        non_empty("problem", problem)?;
        if n == 0 {
            return Err(LlmError::Invalid("n must be at least 1".into()));
        }
        self.call(PromptId::Nl2fl, &[("problem", problem)], n, temperature, &[key])
    }

    pub fn back_translate(&self, keys: &[&str], statement: &str) -> Result<String, LlmError> {
        non_empty("statement", statement)?;
        Ok(self.call(PromptId::Fl2nl, &[("statement", statement)], 1, 0.0, keys)?.remove(0))
    }

    pub fn judge_nli(&self, keys: &[&str], original: &str, back_translated: &str) -> Result<TriVerdict, LlmError> {
        non_empty("original", original)?;
        non_empty("back translation", back_translated)?;
        self.judge(
            PromptId::Nli,
            &[("original", original), ("back_translated", back_translated)],
            keys,
            ("same", "different"),
        )
    }

    pub fn prove(&self, keys: &[&str], statement: &str, k: u32, temperature: f64) -> Result<Vec<String>, LlmError> {
        non_empty("statement", statement)?;
        if k == 0 {
            return Ok(Vec::new());
        }
        self.call(PromptId::Prove, &[("statement", statement)], k, temperature, keys)
    }
}
