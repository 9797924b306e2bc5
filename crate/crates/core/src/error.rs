use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CoreError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("validation: {0}")]
    Validation(String),

    #[error("store at {path} is locked by another writer")]
    Locked { path: PathBuf },

    #[error("duplicate record key {key}")]
    DuplicateKey { key: String },

    #[error("corrupt record at {path}:{line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },

    #[error("unreviewed candidates cannot be exported: {0:?}")]
    Unreviewed(Vec<String>),

    #[error("unknown round {0}")]
    UnknownRound(u32),

    #[error("store format version {found} does not match expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CoreError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CoreError::Io { path: path.into(), source }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CoreError::Validation(msg.into())
    }
}
