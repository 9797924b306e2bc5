//! How worker processes are started.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;
use std::sync::{Arc, LazyLock};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::ReplError;

pub trait Launcher: Send + Sync + std::fmt::Debug {
    fn kind(&self) -> &'static str;
    /// A command that starts one REPL process; stdio is set by the pool.
    fn command(&self) -> Command;
    /// Version tag reported by the prover.
    fn version(&self) -> Result<String, ReplError>;
}

/// Serializable launcher selection, as found in config files and CLI flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaunchSpec {
    pub kind: String,
    pub program: PathBuf,
    #[serde(default)]
    pub args: Vec<String>,
    /// Lake project that provides Mathlib; the REPL runs inside it.
    #[serde(default)]
    pub project_dir: Option<PathBuf>,
}

/// The community `repl` binary, optionally run through `lake env` inside a
/// Mathlib project.
#[derive(Debug, Clone)]
pub struct LeanLauncher {
    pub repl_bin: PathBuf,
    pub project_dir: Option<PathBuf>,
    pub lake_bin: PathBuf,
}

impl Launcher for LeanLauncher {
    fn kind(&self) -> &'static str {
        "lean"
    }

    fn command(&self) -> Command {
        match &self.project_dir {
            Some(dir) => {
                let mut c = Command::new(&self.lake_bin);
                c.arg("env").arg(&self.repl_bin).current_dir(dir);
                c
            }
            None => Command::new(&self.repl_bin),
        }
    }

    fn version(&self) -> Result<String, ReplError> {
        let mut c = match &self.project_dir {
            Some(dir) => {
                let mut c = Command::new(&self.lake_bin);
                c.args(["env", "lean", "--version"]).current_dir(dir);
                c
            }
            None => {
                let mut c = Command::new("lean");
                c.arg("--version");
                c
            }
        };
        let program = PathBuf::from(c.get_program());
        let out = c.output().map_err(|source| ReplError::Spawn { program, source })?;
        let text = String::from_utf8_lossy(&out.stdout);
        parse_lean_version(&text)
            .ok_or_else(|| ReplError::Startup(format!("unrecognized `lean --version` output: {}", text.trim())))
    }
}

static LEAN_VERSION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"version ([0-9][^\s,)]*)").expect("static pattern"));

/// Extracts `4.8.0-rc1` from `Lean (version 4.8.0-rc1, x86_64-unknown-linux-gnu, ...)`.
pub fn parse_lean_version(text: &str) -> Option<String> {
    LEAN_VERSION.captures(text).map(|c| c[1].to_string())
}

/// Any program speaking the wire protocol that prints its tag for
/// `--version`, such as the bundled simulator.
#[derive(Debug, Clone)]
pub struct SimLauncher {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl Launcher for SimLauncher {
    fn kind(&self) -> &'static str {
        "sim"
    }

    fn command(&self) -> Command {
        let mut c = Command::new(&self.program);
        c.args(&self.args);
        c
    }

    fn version(&self) -> Result<String, ReplError> {
        let out = Command::new(&self.program)
            .args(&self.args)
            .arg("--version")
            .output()
            .map_err(|source| ReplError::Spawn { program: self.program.clone(), source })?;
        Ok(String::from_utf8_lossy(&out.stdout).trim().to_string())
    }
}

type Factory = fn(&LaunchSpec) -> Arc<dyn Launcher>;

/// Launcher constructors by name.
#[derive(Clone)]
pub struct LauncherRegistry {
    factories: BTreeMap<String, Factory>,
}

impl std::fmt::Debug for LauncherRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

impl Default for LauncherRegistry {
    fn default() -> Self {
        let mut r = LauncherRegistry { factories: BTreeMap::new() };
        r.register("lean", |spec| {
            Arc::new(LeanLauncher {
                repl_bin: spec.program.clone(),
                project_dir: spec.project_dir.clone(),
                lake_bin: PathBuf::from("lake"),
            })
        });
        r.register("sim", |spec| Arc::new(SimLauncher { program: spec.program.clone(), args: spec.args.clone() }));
        r
    }
}

impl LauncherRegistry {
    pub fn register(&mut self, name: &str, factory: Factory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn build(&self, spec: &LaunchSpec) -> Result<Arc<dyn Launcher>, ReplError> {
        let f = self.factories.get(&spec.kind).ok_or_else(|| ReplError::UnknownLauncher(spec.kind.clone()))?;
        Ok(f(spec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lean_version_line() {
        assert_eq!(
            parse_lean_version("Lean (version 4.8.0-rc1, x86_64-unknown-linux-gnu, commit abc, Release)").as_deref(),
            Some("4.8.0-rc1")
        );
        assert_eq!(parse_lean_version("garbage"), None);
    }

    #[test]
    fn registry_by_name() {
        let r = LauncherRegistry::default();
        assert_eq!(r.names(), vec!["lean", "sim"]);
        let spec = LaunchSpec { kind: "sim".into(), program: "x".into(), args: vec![], project_dir: None };
        assert_eq!(r.build(&spec).unwrap().kind(), "sim");
        let bad = LaunchSpec { kind: "nope".into(), ..spec };
        assert!(matches!(r.build(&bad), Err(ReplError::UnknownLauncher(_))));
    }
}
