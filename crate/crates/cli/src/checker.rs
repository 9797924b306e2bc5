//! Checker selection from flags and environment.

use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use forge_pipeline::config::build_checker;
use forge_pipeline::CheckerSpec;
use forge_repl::{LauncherRegistry, StatementChecker};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Args)]
pub struct CheckerArgs {
    /// Checker kind: `mock`, `sim` or `lean`. Overrides the config file.
    #[arg(long = "checker", env = "FORGE_CHECKER")]
    pub kind: Option<String>,
    /// REPL program. Defaults to this binary's `sim-repl` for `sim`.
    #[arg(long = "checker-program", env = "FORGE_CHECKER_PROGRAM")]
    pub program: Option<PathBuf>,
    /// Extra argument passed to the REPL program (repeatable).
    #[arg(long = "checker-arg", allow_hyphen_values = true)]
    pub args: Vec<String>,
    /// Lake project providing Mathlib.
    #[arg(long = "lean-project", env = "FORGE_LEAN_PROJECT")]
    pub project_dir: Option<PathBuf>,
    #[arg(long = "checker-workers", env = "FORGE_CHECKER_WORKERS")]
    pub workers: Option<usize>,
    /// Per-statement timeout in seconds.
    #[arg(long = "checker-timeout", env = "FORGE_CHECKER_TIMEOUT")]
    pub timeout_s: Option<f64>,
}

impl CheckerArgs {
    /// Lays the flags over `spec`.
    pub fn apply(&self, spec: &mut CheckerSpec) -> CliResult<()> {
        if let Some(kind) = &self.kind {
            if *kind != spec.kind {
                spec.program = None;
                spec.args.clear();
            }
            spec.kind = kind.clone();
        }
        if let Some(p) = &self.program {
            spec.program = Some(p.clone());
        }
        if !self.args.is_empty() {
            spec.args = self.args.clone();
        }
        if let Some(d) = &self.project_dir {
            spec.project_dir = Some(d.clone());
        }
        if let Some(w) = self.workers {
            spec.pool.workers = w;
        }
        if let Some(t) = self.timeout_s {
            spec.pool.timeout_s = t;
        }
        if spec.kind == "sim" && spec.program.is_none() {
            let exe = std::env::current_exe()
                .map_err(|e| CliError::environment("checker", format!("cannot locate own binary: {e}")))?;
            spec.program = Some(exe);
            spec.args = vec!["sim-repl".into()];
        }
        spec.pool.validate()?;
        Ok(())
    }

    pub fn spec(&self) -> CliResult<CheckerSpec> {
        let mut spec = CheckerSpec::default();
        self.apply(&mut spec)?;
        Ok(spec)
    }

    pub fn build(&self) -> CliResult<Arc<dyn StatementChecker>> {
        let spec = self.spec()?;
        Ok(build_checker(&spec, &LauncherRegistry::default())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_spec() {
        let args = CheckerArgs {
            kind: Some("lean".into()),
            program: Some("repl".into()),
            workers: Some(2),
            ..Default::default()
        };
        let mut spec = CheckerSpec { args: vec!["x".into()], ..Default::default() };
        args.apply(&mut spec).unwrap();
        assert_eq!(spec.kind, "lean");
        assert_eq!(spec.program, Some(PathBuf::from("repl")));
        assert!(spec.args.is_empty());
        assert_eq!(spec.pool.workers, 2);
    }

    #[test]
    fn sim_defaults_to_own_binary() {
        let spec = CheckerArgs { kind: Some("sim".into()), ..Default::default() }.spec().unwrap();
        assert_eq!(spec.args, vec!["sim-repl".to_string()]);
        assert!(spec.program.is_some());
        assert!(CheckerArgs { workers: Some(0), ..Default::default() }.spec().is_err());
    }
}
