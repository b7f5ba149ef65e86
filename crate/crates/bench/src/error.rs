use std::path::PathBuf;

use cardio_client::ClientError;
use cardio_core::HrvError;
use cardio_engine::EngineError;
use cardio_metrics::MetricsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid workload: {0}")]
    InvalidWorkload(String),
    #[error("cannot write workload to {path}: {source}")]
    SinkUnavailable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("report {path}: {source}")]
    Report { path: PathBuf, source: csv::Error },
    #[error("{failed} of {total} batches failed")]
    BatchesFailed { failed: usize, total: usize },
    #[error("no baseline row for workload {workload}, algorithm {algorithm}")]
    MissingBaseline { workload: String, algorithm: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Hrv(#[from] HrvError),
}
