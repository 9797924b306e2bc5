use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::ReplError;

/// Run once per worker to build environment 0.
pub const DEFAULT_HEADER: &str =
    "import Mathlib\nimport Aesop\nset_option maxHeartbeats 400000\nopen BigOperators Real Nat Topology Rat";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoolConfig {
    pub workers: usize,
    /// Per-statement budget in seconds.
    pub timeout_s: f64,
    /// Per-proof budget in seconds.
    pub proof_timeout_s: f64,
    /// Budget for the header import of a fresh worker.
    pub startup_timeout_s: f64,
    /// A worker is restarted after serving this many jobs.
    pub max_jobs_per_worker: u32,
    /// Bounded submission queue; defaults to four jobs per worker.
    pub queue_capacity: Option<usize>,
    /// Version the prover must report, e.g. `4.8.0-rc1`.
    pub env_tag: Option<String>,
    pub header: String,
    /// When set, every raw response is dumped here as a replay fixture.
    pub record_fixtures: Option<PathBuf>,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig {
            workers: 4,
            timeout_s: 60.0,
            proof_timeout_s: 120.0,
            startup_timeout_s: 600.0,
            max_jobs_per_worker: 200,
            queue_capacity: None,
            env_tag: None,
            header: DEFAULT_HEADER.to_string(),
            record_fixtures: None,
        }
    }
}

impl PoolConfig {
    pub fn validate(&self) -> Result<(), ReplError> {
        if self.workers == 0 {
            return Err(ReplError::Config("workers must be at least 1".into()));
        }
        for (name, v) in [
            ("timeout_s", self.timeout_s),
            ("proof_timeout_s", self.proof_timeout_s),
            ("startup_timeout_s", self.startup_timeout_s),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(ReplError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_jobs_per_worker == 0 {
            return Err(ReplError::Config("max_jobs_per_worker must be at least 1".into()));
        }
        if self.queue_capacity == Some(0) {
            return Err(ReplError::Config("queue_capacity must be at least 1".into()));
        }
        Ok(())
    }

    pub fn capacity(&self) -> usize {
        self.queue_capacity.unwrap_or(4 * self.workers)
    }

    pub fn statement_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s)
    }

    pub fn proof_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.proof_timeout_s)
    }

    pub fn startup_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.startup_timeout_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_workers_rejected() {
        let c = PoolConfig { workers: 0, ..PoolConfig::default() };
        assert!(matches!(c.validate(), Err(ReplError::Config(_))));
        assert!(PoolConfig { timeout_s: 0.0, ..PoolConfig::default() }.validate().is_err());
        assert!(PoolConfig::default().validate().is_ok());
        assert_eq!(PoolConfig::default().capacity(), 16);
    }
}
