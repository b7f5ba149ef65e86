use std::collections::HashMap;
use std::sync::Arc;

use cardio_core::{AlgorithmKind, ExecutionMode};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::error::MetricsError;

/// Timing record of one processed (client, window) batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub client_id: String,
    pub window_id: u64,
    pub record_count: u64,
    /// Wall-clock time from batch formation to the result being durably written.
    pub processing_time_ms: f64,
    pub mode: ExecutionMode,
    pub algorithm: AlgorithmKind,
    #[serde(default)]
    pub failed: bool,
}

/// Run-level labels carried into summaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub mode: ExecutionMode,
    pub algorithm: AlgorithmKind,
    pub load_label: String,
}

/// Append-only log of one run's batch statistics.
///
/// One writer appends, any number of readers take snapshots. A snapshot is
/// always a prefix of the final log.
#[derive(Debug)]
pub struct StatsLog {
    run_id: String,
    meta: RunMeta,
    entries: RwLock<Vec<BatchStats>>,
}

impl StatsLog {
    pub fn new(run_id: impl Into<String>, meta: RunMeta) -> Self {
        StatsLog {
            run_id: run_id.into(),
            meta,
            entries: RwLock::new(Vec::new()),
        }
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn meta(&self) -> &RunMeta {
        &self.meta
    }

    pub fn record(&self, stats: BatchStats) {
        self.entries.write().push(stats);
    }

    pub fn snapshot(&self) -> Vec<BatchStats> {
        self.entries.read().clone()
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// All runs known to a process, keyed by run id.
#[derive(Debug, Default)]
pub struct StatsRegistry {
    runs: RwLock<HashMap<String, Arc<StatsLog>>>,
}

impl StatsRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a run, replacing any previous run with the same id.
    pub fn create_run(&self, run_id: impl Into<String>, meta: RunMeta) -> Arc<StatsLog> {
        let run_id = run_id.into();
        let log = Arc::new(StatsLog::new(run_id.clone(), meta));
        self.runs.write().insert(run_id, Arc::clone(&log));
        log
    }

    pub fn run(&self, run_id: &str) -> Option<Arc<StatsLog>> {
        self.runs.read().get(run_id).cloned()
    }

    pub fn get_batches(&self, run_id: &str) -> Result<Vec<BatchStats>, MetricsError> {
        self.run(run_id)
            .map(|log| log.snapshot())
            .ok_or_else(|| MetricsError::UnknownRun(run_id.to_string()))
    }

    pub fn run_ids(&self) -> Vec<String> {
        let mut ids: Vec<_> = self.runs.read().keys().cloned().collect();
        ids.sort();
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> RunMeta {
        RunMeta {
            mode: ExecutionMode::Baseline,
            algorithm: AlgorithmKind::Sdnn,
            load_label: "test".into(),
        }
    }

    fn entry(window_id: u64) -> BatchStats {
        BatchStats {
            client_id: "c1".into(),
            window_id,
            record_count: 10,
            processing_time_ms: 1.5,
            mode: ExecutionMode::Baseline,
            algorithm: AlgorithmKind::Sdnn,
            failed: false,
        }
    }

    #[test]
    fn record_then_get() {
        let reg = StatsRegistry::new();
        let log = reg.create_run("r1", meta());
        assert!(reg.get_batches("r1").unwrap().is_empty());
        log.record(entry(0));
        assert_eq!(reg.get_batches("r1").unwrap(), vec![entry(0)]);
    }

    #[test]
    fn thirty_records_in_order() {
        let reg = StatsRegistry::new();
        let log = reg.create_run("r1", meta());
        for w in 0..30 {
            log.record(entry(w));
        }
        let got = reg.get_batches("r1").unwrap();
        assert_eq!(got.len(), 30);
        assert!(got.iter().enumerate().all(|(i, s)| s.window_id == i as u64));
    }

    #[test]
    fn unknown_run() {
        let reg = StatsRegistry::new();
        assert_eq!(
            reg.get_batches("nope"),
            Err(MetricsError::UnknownRun("nope".into()))
        );
    }

    #[test]
    fn json_shape() {
        let v = serde_json::to_value(entry(3)).unwrap();
        assert_eq!(v["mode"], "Baseline");
        assert_eq!(v["algorithm"], "sdnn");
        assert_eq!(v["window_id"], 3);
    }
}
