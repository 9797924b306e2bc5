//! Round configuration file and the runtime objects built from it.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use forge_core::SamplingConfig;
use forge_llm::{BackendRegistry, BackendSpec, Gateway, GatewayConfig, PromptRegistry};
use forge_repl::{LaunchSpec, LauncherRegistry, MockChecker, PoolConfig, ReplPool, StatementChecker};
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;
use crate::filter::TagAllowlist;

pub const CONFIG_VERSION: u32 = 1;

/// One backend per model-facing stage; stages left out use `default`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageBackends {
    pub default: BackendSpec,
    #[serde(default)]
    pub extract: Option<BackendSpec>,
    #[serde(default)]
    pub judge: Option<BackendSpec>,
    #[serde(default)]
    pub translate: Option<BackendSpec>,
    #[serde(default)]
    pub back_translate: Option<BackendSpec>,
    #[serde(default)]
    pub nli: Option<BackendSpec>,
    #[serde(default)]
    pub prove: Option<BackendSpec>,
}

impl Default for StageBackends {
    fn default() -> Self {
        StageBackends {
            default: BackendSpec::of_kind("echo"),
            extract: None,
            judge: None,
            translate: None,
            back_translate: None,
            nli: None,
            prove: None,
        }
    }
}

/// `mock` judges statements without a prover; any other kind names a
/// launcher and starts a REPL pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckerSpec {
    pub kind: String,
    #[serde(default)]
    pub program: Option<PathBuf>,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default)]
    pub project_dir: Option<PathBuf>,
    #[serde(default)]
    pub pool: PoolConfig,
}

impl Default for CheckerSpec {
    fn default() -> Self {
        CheckerSpec { kind: "mock".into(), program: None, args: vec![], project_dir: None, pool: PoolConfig::default() }
    }
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

fn default_parallelism() -> usize {
    4
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LintSettings {
    /// Apply fixable findings before the compile check.
    #[serde(default = "default_true")]
    pub apply_fixes: bool,
    /// Restrict to these rule ids; all built-in rules when absent.
    #[serde(default)]
    pub rules: Option<Vec<String>>,
}

impl Default for LintSettings {
    fn default() -> Self {
        LintSettings { apply_fixes: true, rules: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub round: u32,
    pub model_id: String,
    #[serde(default)]
    pub seed: u64,
    pub store: PathBuf,
    /// Problems to import into the store before the round, JSONL.
    #[serde(default)]
    pub problems: Option<PathBuf>,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub allowlist: TagAllowlist,
    #[serde(default)]
    pub lint: LintSettings,
    #[serde(default)]
    pub backends: StageBackends,
    #[serde(default)]
    pub gateway: GatewayConfig,
    #[serde(default)]
    pub checker: CheckerSpec,
    /// Override for the bundled prompt file.
    #[serde(default)]
    pub prompts: Option<PathBuf>,
    /// Problems processed concurrently.
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

impl RoundConfig {
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let cfg: RoundConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut cfg = RoundConfig::parse(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.version != CONFIG_VERSION {
            return Err(PipelineError::Config(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.model_id.trim().is_empty() {
            return Err(PipelineError::Config("model_id is empty".into()));
        }
        if self.parallelism == 0 {
            return Err(PipelineError::Config("parallelism must be at least 1".into()));
        }
        self.sampling.validate()?;
        self.checker.pool.validate()?;
        Ok(())
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.store);
        self.problems.as_mut().map(fix);
        self.prompts.as_mut().map(fix);
        self.checker.program.as_mut().map(fix);
        self.checker.project_dir.as_mut().map(fix);
        let b = &mut self.backends;
        for spec in [&mut b.extract, &mut b.judge, &mut b.translate, &mut b.back_translate, &mut b.nli, &mut b.prove]
            .into_iter()
            .flatten()
            .chain(std::iter::once(&mut b.default))
        {
            spec.fixtures.as_mut().map(fix);
        }
    }

    /// Digest of everything that shapes the round's output, prompts
    /// included. Paths are left out so a moved store keeps its digest.
    pub fn digest(&self, prompts: &PromptRegistry) -> String {
        let mut c = self.clone();
        c.store = PathBuf::new();
        c.problems = None;
        c.prompts = None;
        c.parallelism = 0;
        c.checker.program = None;
        c.checker.project_dir = None;
        c.checker.pool.record_fixtures = None;
        let b = &mut c.backends;
        for spec in [&mut b.extract, &mut b.judge, &mut b.translate, &mut b.back_translate, &mut b.nli, &mut b.prove]
            .into_iter()
            .flatten()
            .chain(std::iter::once(&mut b.default))
        {
            spec.fixtures = None;
        }
        forge_core::digest::json_digest(&(c, prompts.digest()))
    }
}

/// Gateways for every model-facing stage.
#[derive(Debug, Clone)]
pub struct Gateways {
    pub extract: Arc<Gateway>,
    pub judge: Arc<Gateway>,
    pub translate: Arc<Gateway>,
    pub back_translate: Arc<Gateway>,
    pub nli: Arc<Gateway>,
    pub prove: Arc<Gateway>,
}

impl Gateways {
    /// The same backend for every stage.
    pub fn uniform(gateway: Arc<Gateway>) -> Self {
        Gateways {
            extract: Arc::clone(&gateway),
            judge: Arc::clone(&gateway),
            translate: Arc::clone(&gateway),
            back_translate: Arc::clone(&gateway),
            nli: Arc::clone(&gateway),
            prove: gateway,
        }
    }

    pub fn build(
        backends: &StageBackends,
        registry: &BackendRegistry,
        prompts: Arc<PromptRegistry>,
        config: &GatewayConfig,
    ) -> Result<Self, PipelineError> {
        let default = Arc::new(Gateway::new(registry.build(&backends.default)?, Arc::clone(&prompts), config.clone()));
        let stage = |spec: &Option<BackendSpec>| -> Result<Arc<Gateway>, PipelineError> {
            match spec {
                Some(s) => Ok(Arc::new(Gateway::new(registry.build(s)?, Arc::clone(&prompts), config.clone()))),
                None => Ok(Arc::clone(&default)),
            }
        };
        Ok(Gateways {
            extract: stage(&backends.extract)?,
            judge: stage(&backends.judge)?,
            translate: stage(&backends.translate)?,
            back_translate: stage(&backends.back_translate)?,
            nli: stage(&backends.nli)?,
            prove: stage(&backends.prove)?,
        })
    }
}

pub fn build_checker(
    spec: &CheckerSpec,
    launchers: &LauncherRegistry,
) -> Result<Arc<dyn StatementChecker>, PipelineError> {
    if spec.kind == "mock" {
        return Ok(Arc::new(MockChecker::new()));
    }
    let program =
        spec.program.clone().ok_or_else(|| PipelineError::Config(format!("checker {} needs a program", spec.kind)))?;
    let launch =
        LaunchSpec { kind: spec.kind.clone(), program, args: spec.args.clone(), project_dir: spec.project_dir.clone() };
    let launcher = launchers.build(&launch)?;
    Ok(Arc::new(ReplPool::spawn(launcher, spec.pool.clone())?))
}

pub fn load_prompts(path: Option<&Path>) -> Result<Arc<PromptRegistry>, PipelineError> {
    Ok(Arc::new(match path {
        Some(p) => PromptRegistry::load(p)?,
        None => PromptRegistry::default(),
    }))
}
