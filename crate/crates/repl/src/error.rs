use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReplError {
    #[error("invalid pool config: {0}")]
    Config(String),

    #[error("cannot start {program}: {source}")]
    Spawn {
        program: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("prover version mismatch: found {found}, expected {expected}")]
    VersionMismatch { found: String, expected: String },

    #[error("worker startup failed: {0}")]
    Startup(String),

    #[error("unknown launcher {0:?}")]
    UnknownLauncher(String),

    #[error("job queue is full")]
    Busy,

    #[error("pool is shut down")]
    ShutDown,

    #[error("{0}")]
    Statement(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
