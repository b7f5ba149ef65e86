//! Cross-run summaries: mean and sample standard deviation.
//!
//! Repeated executions are a sample of possible runs, so the spread uses
//! the `n - 1` estimator. (Per-series SDNN uses the population estimator.)

use cardio_core::{AlgorithmKind, ExecutionMode, Scalar};
use serde::{Deserialize, Serialize};

use crate::error::MetricsError;
use crate::stats::RunMeta;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: ExecutionMode,
    pub algorithm: AlgorithmKind,
    pub load_label: String,
    pub mean_ms: f64,
    pub stddev_ms: f64,
    pub n_runs: usize,
}

/// Mean and sample standard deviation; the deviation is 0 for one value.
pub fn mean_stddev<T: Scalar>(values: &[T]) -> Result<(T, T), MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyGroup);
    }
    let n = T::from_count(values.len());
    let mean = values.iter().fold(T::zero(), |a, &v| a + v) / n;
    if values.len() == 1 {
        return Ok((mean, T::zero()));
    }
    let ss = values
        .iter()
        .fold(T::zero(), |a, &v| a + (v - mean) * (v - mean));
    Ok((mean, (ss / (n - T::one())).sqrt()))
}

pub fn summarize(meta: &RunMeta, elapsed_ms: &[f64]) -> Result<RunSummary, MetricsError> {
    let (mean_ms, stddev_ms) = mean_stddev(elapsed_ms)?;
    Ok(RunSummary {
        mode: meta.mode,
        algorithm: meta.algorithm,
        load_label: meta.load_label.clone(),
        mean_ms,
        stddev_ms,
        n_runs: elapsed_ms.len(),
    })
}
