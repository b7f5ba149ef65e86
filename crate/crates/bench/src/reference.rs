//! Reference timings used to exercise the comparison pipeline.
//!
//! Big batch loads of 1 to 32 MB with a 100 ms baseline and typical
//! split and enclave slow-down factors. These are fixtures, not
//! measurements from this machine.

use cardio_core::{AlgorithmKind, ExecutionMode};

use crate::suite::{apply_slowdowns, ReportRow};

pub const REFERENCE_BASELINE_MS: f64 = 100.0;
pub const REFERENCE_RUNS: usize = 5;

/// `(workload, split factor, enclave factor, stddev/mean)` per load.
pub const REFERENCE_FACTORS: [(&str, f64, f64, f64); 6] = [
    ("be-big-44", 2.0, 4.0, 0.02),
    ("be-big-89", 2.5, 4.0, 0.03),
    ("be-big-178", 2.25, 4.5, 0.05),
    ("be-big-356", 2.5, 5.0, 0.35),
    ("be-big-712", 2.5, 4.5, 0.5),
    ("be-big-1424", 2.5, 4.25, 0.6),
];

/// Enclave over split for each row of [`REFERENCE_FACTORS`].
pub const REFERENCE_ENCLAVE_OVER_SPLIT: [f64; 6] = [2.0, 1.6, 2.0, 2.0, 1.8, 1.7];

/// First load whose spread exceeds the default threshold.
pub const REFERENCE_VARIANCE_THRESHOLD: &str = "be-big-356";

/// A complete report for the identity algorithm built from the factors.
pub fn reference_report() -> Vec<ReportRow> {
    let mut rows = Vec::with_capacity(REFERENCE_FACTORS.len() * 3);
    for (workload, split, enclave, cv) in REFERENCE_FACTORS {
        for (mode, factor) in [
            (ExecutionMode::Baseline, 1.0),
            (ExecutionMode::SplitPlain, split),
            (ExecutionMode::SplitEncrypted, enclave),
        ] {
            let mean = REFERENCE_BASELINE_MS * factor;
            rows.push(ReportRow {
                workload: workload.into(),
                mode: mode.short_name().into(),
                algorithm: AlgorithmKind::Identity.name().into(),
                mean_ms: Some(mean),
                stddev_ms: Some(mean * cv),
                slowdown: None,
                n_runs: REFERENCE_RUNS,
                error: None,
            });
        }
    }
    apply_slowdowns(&mut rows);
    rows
}
