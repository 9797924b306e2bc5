//! Lean REPL process pool.
//!
//! Each worker is one long-lived REPL subprocess that imports the library
//! once (environment 0) and then answers one command at a time against that
//! environment. Commands and responses are JSON objects over stdin/stdout,
//! separated by blank lines.

mod checker;
mod classify;
mod config;
mod error;
mod launcher;
mod pool;
pub mod protocol;
pub mod sim;

pub use checker::{compose_proof, MockChecker, Override, StatementChecker};
pub use classify::{classify_response, is_sorry_warning, SORRY_WARNING};
pub use config::{PoolConfig, DEFAULT_HEADER};
pub use error::ReplError;
pub use launcher::{parse_lean_version, LaunchSpec, Launcher, LauncherRegistry, LeanLauncher, SimLauncher};
pub use pool::{ReplPool, Ticket};
pub use protocol::{ReplMessage, ReplRequest, ReplResponse, ResponseFixture};
