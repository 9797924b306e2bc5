//! The per-sample chain shared by rounds and best-of-k mode:
//! normalize, lint, fix, check, back-translate, judge.

use std::sync::Arc;

use forge_core::{CompileVerdict, LintReport, TriState};
use forge_lean::{apply_fixes, canonical_fingerprint, normalize::normalize_text, Linter, NamePolicy, RuleRegistry};
use forge_llm::{strip_code_fence, BackendRegistry, PromptRegistry};
use forge_repl::{LauncherRegistry, StatementChecker};

use crate::config::{build_checker, load_prompts, Gateways, RoundConfig};
use crate::error::PipelineError;
use crate::fault::{FaultInjector, Stage};

/// Everything a round talks to.
#[derive(Clone)]
pub struct Stages {
    pub gateways: Gateways,
    pub checker: Arc<dyn StatementChecker>,
    pub linter: Arc<Linter>,
    pub apply_fixes: bool,
}

impl std::fmt::Debug for Stages {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stages").field("env", &self.checker.env_tag()).finish_non_exhaustive()
    }
}

impl Stages {
    pub fn build(cfg: &RoundConfig) -> Result<Self, PipelineError> {
        Self::with_registries(cfg, &BackendRegistry::default(), &LauncherRegistry::default())
    }

    pub fn with_registries(
        cfg: &RoundConfig,
        backends: &BackendRegistry,
        launchers: &LauncherRegistry,
    ) -> Result<Self, PipelineError> {
        let prompts = load_prompts(cfg.prompts.as_deref())?;
        let gateways = Gateways::build(&cfg.backends, backends, prompts, &cfg.gateway)?;
        let linter = match &cfg.lint.rules {
            Some(ids) => Linter::new(RuleRegistry::builtin().only(ids)?),
            None => Linter::default(),
        };
        Ok(Stages {
            gateways,
            checker: build_checker(&cfg.checker, launchers)?,
            linter: Arc::new(linter),
            apply_fixes: cfg.lint.apply_fixes,
        })
    }

    pub fn prompts(&self) -> &PromptRegistry {
        self.gateways.translate.prompts()
    }

    /// Canonical form of a raw completion. Text that does not parse is kept
    /// as-is so the checker reports on it.
    pub fn normalize(raw: &str, policy: &NamePolicy) -> String {
        let body = strip_code_fence(raw).trim();
        normalize_text(body, policy).unwrap_or_else(|_| body.to_string())
    }

    /// Lints and, when enabled, applies the fixable findings. Returns the
    /// text to check and the findings left on it.
    pub fn lint_and_fix(&self, normalized: &str, nl_text: &str) -> (String, LintReport) {
        let report = self.linter.lint(normalized, Some(nl_text));
        if !self.apply_fixes || report.fixable_count() == 0 {
            return (normalized.to_string(), report);
        }
        match apply_fixes(normalized, &report) {
            Ok(fixed) => {
                let after = self.linter.lint(&fixed, Some(nl_text));
                (fixed, after)
            }
            Err(e) => {
                log::warn!("fixes not applied: {e}");
                (normalized.to_string(), report)
            }
        }
    }

    /// Compile check, then back-translation and NLI for statements that
    /// elaborate. `Err` leaves the sample unjudged.
    pub fn verify(
        &self,
        text: &str,
        nl_text: &str,
        keys: &[&str],
        faults: &FaultInjector,
    ) -> Result<Verified, StepError> {
        faults.check(Stage::Compile)?;
        let compile = self.checker.check_statement(text).map_err(|e| StepError::failed(Stage::Compile, e.into()))?;
        if !compile.is_pass() {
            return Ok(Verified { compile, back_translation: None, nli: TriState::Unjudged });
        }
        faults.check(Stage::BackTranslate)?;
        let back = self
            .gateways
            .back_translate
            .back_translate(keys, text)
            .map_err(|e| StepError::failed(Stage::BackTranslate, e.into()))?;
        faults.check(Stage::Nli)?;
        let verdict =
            self.gateways.nli.judge_nli(keys, nl_text, &back).map_err(|e| StepError::failed(Stage::Nli, e.into()))?;
        Ok(Verified { compile, back_translation: Some(back), nli: verdict.value.to_tristate() })
    }
}

pub fn fingerprint_of(text: &str) -> String {
    canonical_fingerprint(text).to_string()
}

#[derive(Debug, Clone)]
pub struct Verified {
    pub compile: CompileVerdict,
    pub back_translation: Option<String>,
    pub nli: TriState,
}

/// A step either crashed (injected fault: abort the whole run) or failed
/// for this job only.
#[derive(Debug)]
pub enum StepError {
    Abort(PipelineError),
    Failed { stage: Stage, error: PipelineError },
}

impl StepError {
    pub fn failed(stage: Stage, error: PipelineError) -> Self {
        StepError::Failed { stage, error }
    }
}

impl From<PipelineError> for StepError {
    fn from(e: PipelineError) -> Self {
        StepError::Abort(e)
    }
}
