//! Slow-down factors between execution modes, in a plot-ready table.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use cardio_core::{AlgorithmKind, ExecutionMode};
use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::suite::ReportRow;
use crate::workload::WorkloadSpec;

/// Coefficient of variation above which a workload counts as unstable.
pub const DEFAULT_CV_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub workload: String,
    pub algorithm: String,
    pub baseline_ms: f64,
    pub split_slowdown: Option<f64>,
    pub enclave_slowdown: Option<f64>,
    pub enclave_over_split: Option<f64>,
    /// Largest stddev/mean among the workload's rows for this algorithm.
    pub max_cv: f64,
    /// Set on the rows of the first workload whose variance crosses the
    /// threshold.
    pub variance_flag: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub variance_threshold: Option<String>,
}

fn workload_order(label: &str) -> (usize, String) {
    let ordinal = label
        .parse::<WorkloadSpec>()
        .map(|s| s.ordinal())
        .unwrap_or(usize::MAX);
    (ordinal, label.to_string())
}

fn algorithm_order(name: &str) -> (usize, String) {
    let ordinal = name
        .parse::<AlgorithmKind>()
        .map(|a| a as usize)
        .unwrap_or(usize::MAX);
    (ordinal, name.to_string())
}

fn cv(row: &ReportRow) -> Option<f64> {
    match (row.mean_ms, row.stddev_ms) {
        (Some(m), Some(s)) if m > 0.0 && !row.is_failed() => Some(s / m),
        _ => None,
    }
}

/// Per (workload, algorithm): slow-down of the split and enclave modes
/// against baseline and of enclave against split. Workloads are walked in
/// lattice order to find the first one with any row whose stddev/mean
/// exceeds `cv_threshold`.
pub fn compare_modes(report: &[ReportRow], cv_threshold: f64) -> Result<Comparison, BenchError> {
    let by_key: HashMap<(&str, &str, &str), &ReportRow> = report
        .iter()
        .map(|r| {
            (
                (r.workload.as_str(), r.mode.as_str(), r.algorithm.as_str()),
                r,
            )
        })
        .collect();
    let mean = |w: &str, mode: ExecutionMode, a: &str| {
        by_key
            .get(&(w, mode.short_name(), a))
            .filter(|r| !r.is_failed())
            .and_then(|r| r.mean_ms)
    };

    let mut groups: Vec<(&str, &str)> = report
        .iter()
        .map(|r| (r.workload.as_str(), r.algorithm.as_str()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    groups.sort_by_key(|&(w, a)| (workload_order(w), algorithm_order(a)));

    let mut rows = Vec::with_capacity(groups.len());
    for (w, a) in groups {
        let base =
            mean(w, ExecutionMode::Baseline, a).ok_or_else(|| BenchError::MissingBaseline {
                workload: w.into(),
                algorithm: a.into(),
            })?;
        let split = mean(w, ExecutionMode::SplitPlain, a);
        let enclave = mean(w, ExecutionMode::SplitEncrypted, a);
        let max_cv = report
            .iter()
            .filter(|r| r.workload == w && r.algorithm == a)
            .filter_map(cv)
            .fold(0.0, f64::max);
        rows.push(ComparisonRow {
            workload: w.into(),
            algorithm: a.into(),
            baseline_ms: base,
            split_slowdown: split.map(|s| s / base),
            enclave_slowdown: enclave.map(|e| e / base),
            enclave_over_split: match (enclave, split) {
                (Some(e), Some(s)) if s > 0.0 => Some(e / s),
                _ => None,
            },
            max_cv,
            variance_flag: false,
        });
    }

    let variance_threshold = rows
        .iter()
        .find(|r| r.max_cv > cv_threshold)
        .map(|r| r.workload.clone());
    if let Some(w) = &variance_threshold {
        for row in rows.iter_mut().filter(|r| &r.workload == w) {
            row.variance_flag = true;
        }
    }
    Ok(Comparison {
        rows,
        variance_threshold,
    })
}

pub fn write_comparison(path: &Path, comparison: &Comparison) -> Result<(), BenchError> {
    let err = |source| BenchError::Report {
        path: path.into(),
        source,
    };
    let mut writer = csv::Writer::from_path(path).map_err(err)?;
    for row in &comparison.rows {
        writer.serialize(row).map_err(err)?;
    }
    writer.flush().map_err(|source| BenchError::Io {
        path: path.into(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::{aggregate, failed_row};

    #[test]
    fn enclave_against_baseline() {
        let report = vec![
            aggregate(
                "be-small-44",
                ExecutionMode::Baseline,
                AlgorithmKind::Sdnn,
                &[100.0],
            ),
            aggregate(
                "be-small-44",
                ExecutionMode::SplitEncrypted,
                AlgorithmKind::Sdnn,
                &[450.0],
            ),
        ];
        let c = compare_modes(&report, DEFAULT_CV_THRESHOLD).unwrap();
        assert_eq!(c.rows.len(), 1);
        assert_eq!(c.rows[0].enclave_slowdown, Some(4.5));
        assert_eq!(c.rows[0].split_slowdown, None);
        assert_eq!(c.variance_threshold, None);
    }

    #[test]
    fn missing_or_failed_baseline() {
        let only_split = vec![aggregate(
            "be-small-44",
            ExecutionMode::SplitPlain,
            AlgorithmKind::Sdnn,
            &[1.0],
        )];
        assert!(matches!(
            compare_modes(&only_split, 0.2),
            Err(BenchError::MissingBaseline { .. })
        ));
        let failed = vec![failed_row(
            "be-small-44",
            ExecutionMode::Baseline,
            AlgorithmKind::Sdnn,
            &BenchError::BatchesFailed {
                failed: 1,
                total: 1,
            },
        )];
        assert!(matches!(
            compare_modes(&failed, 0.2),
            Err(BenchError::MissingBaseline { .. })
        ));
    }

    #[test]
    fn first_unstable_workload_in_lattice_order() {
        let report = vec![
            aggregate(
                "be-small-89",
                ExecutionMode::Baseline,
                AlgorithmKind::Identity,
                &[10.0, 30.0],
            ),
            aggregate(
                "be-small-44",
                ExecutionMode::Baseline,
                AlgorithmKind::Identity,
                &[10.0, 10.5],
            ),
            aggregate(
                "be-small-178",
                ExecutionMode::Baseline,
                AlgorithmKind::Identity,
                &[10.0, 40.0],
            ),
        ];
        let c = compare_modes(&report, 0.2).unwrap();
        let order: Vec<&str> = c.rows.iter().map(|r| r.workload.as_str()).collect();
        assert_eq!(order, ["be-small-44", "be-small-89", "be-small-178"]);
        assert_eq!(c.variance_threshold.as_deref(), Some("be-small-89"));
        assert!(c.rows[1].variance_flag && !c.rows[0].variance_flag && !c.rows[2].variance_flag);
    }
}
