//! Repeated timed runs of every (workload, mode, algorithm) configuration,
//! aggregated into a resumable CSV report.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use cardio_client::{gateway_flush, GatewayConfig};
use cardio_core::{AlgorithmKind, ExecutionMode};
use cardio_enclave::DataOwner;
use cardio_engine::{run_streaming, Engine, JobSpec, StreamOptions, StreamSourceConfig};
use cardio_metrics::{mean_stddev, BatchStats, RunMeta, StatsRegistry};
use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::workload::{gen_workload, Tachogram, WorkloadKind, WorkloadSpec, DEFAULT_SEED};

pub const DEFAULT_REPETITIONS: usize = 5;
pub const DEFAULT_STREAM_DURATION: Duration = Duration::from_secs(60);
pub const FULL_STREAM_DURATION: Duration = Duration::from_secs(300);

/// One line of the report. `mean_ms` and `stddev_ms` are empty when the
/// configuration failed, `slowdown` when its baseline is missing or failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub workload: String,
    pub mode: String,
    pub algorithm: String,
    pub mean_ms: Option<f64>,
    pub stddev_ms: Option<f64>,
    pub slowdown: Option<f64>,
    pub n_runs: usize,
    pub error: Option<String>,
}

impl ReportRow {
    pub fn key(&self) -> (String, String, String) {
        (
            self.workload.clone(),
            self.mode.clone(),
            self.algorithm.clone(),
        )
    }

    pub fn is_failed(&self) -> bool {
        self.error.is_some() || self.mean_ms.is_none()
    }
}

/// Aggregates recorded timings of one configuration. Pure: the same
/// timings always give the same row.
pub fn aggregate(
    workload: &str,
    mode: ExecutionMode,
    algorithm: AlgorithmKind,
    timings: &[f64],
) -> ReportRow {
    let (mean_ms, stddev_ms) = match mean_stddev(timings) {
        Ok((m, s)) => (Some(m), Some(s)),
        Err(_) => (None, None),
    };
    ReportRow {
        workload: workload.into(),
        mode: mode.short_name().into(),
        algorithm: algorithm.name().into(),
        mean_ms,
        stddev_ms,
        slowdown: None,
        n_runs: timings.len(),
        error: None,
    }
}

pub fn failed_row(
    workload: &str,
    mode: ExecutionMode,
    algorithm: AlgorithmKind,
    error: &BenchError,
) -> ReportRow {
    ReportRow {
        error: Some(error.to_string()),
        ..aggregate(workload, mode, algorithm, &[])
    }
}

/// Fills `slowdown` as the row's mean over the baseline mean of the same
/// workload and algorithm.
pub fn apply_slowdowns(rows: &mut [ReportRow]) {
    let baseline_name = ExecutionMode::Baseline.short_name();
    let baselines: HashMap<(String, String), f64> = rows
        .iter()
        .filter(|r| r.mode == baseline_name && !r.is_failed())
        .filter_map(|r| Some(((r.workload.clone(), r.algorithm.clone()), r.mean_ms?)))
        .collect();
    for row in rows.iter_mut() {
        row.slowdown = match (
            row.mean_ms,
            baselines.get(&(row.workload.clone(), row.algorithm.clone())),
        ) {
            (Some(m), Some(&b)) if b > 0.0 && !row.is_failed() => Some(m / b),
            _ => None,
        };
    }
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRow>, BenchError> {
    let err = |source| BenchError::Report {
        path: path.into(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(err)?;
    reader
        .deserialize()
        .collect::<Result<Vec<ReportRow>, _>>()
        .map_err(err)
}

/// Writes through a temporary file and a rename, so an interrupted suite
/// leaves the previous report intact.
pub fn write_report(path: &Path, rows: &[ReportRow]) -> Result<(), BenchError> {
    let tmp = path.with_extension("csv.tmp");
    let err = |source| BenchError::Report {
        path: path.into(),
        source,
    };
    let mut writer = csv::Writer::from_path(&tmp).map_err(err)?;
    for row in rows {
        writer.serialize(row).map_err(err)?;
    }
    writer.flush().map_err(|source| BenchError::Io {
        path: tmp.clone(),
        source,
    })?;
    drop(writer);
    std::fs::rename(&tmp, path).map_err(|source| BenchError::Io {
        path: path.into(),
        source,
    })
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub workloads: Vec<WorkloadSpec>,
    pub modes: Vec<ExecutionMode>,
    pub algorithms: Vec<AlgorithmKind>,
    pub repetitions: usize,
    /// Length of each streaming repetition.
    pub stream_duration: Duration,
    pub batch_interval: Duration,
    pub seed: u64,
    /// Re-run configurations that already have a complete row.
    pub force: bool,
}

impl SuiteConfig {
    pub fn new(workloads: Vec<WorkloadSpec>) -> Self {
        SuiteConfig {
            workloads,
            modes: ExecutionMode::ALL.to_vec(),
            algorithms: AlgorithmKind::ALL.to_vec(),
            repetitions: DEFAULT_REPETITIONS,
            stream_duration: DEFAULT_STREAM_DURATION,
            batch_interval: StreamSourceConfig::DEFAULT_INTERVAL,
            seed: DEFAULT_SEED,
            force: false,
        }
    }

    pub fn covers(&self, row: &ReportRow) -> bool {
        self.workloads.iter().any(|w| w.label() == row.workload)
            && self.modes.iter().any(|m| m.short_name() == row.mode)
            && self.algorithms.iter().any(|a| a.name() == row.algorithm)
    }
}

#[derive(Debug, Default)]
pub struct SuiteOutcome {
    /// The whole report, including rows of configurations not in this run.
    pub rows: Vec<ReportRow>,
    pub ran: usize,
    pub skipped: usize,
    /// Failed configurations among those this run covers.
    pub failed: usize,
}

/// Runs every configuration sequentially, `repetitions` times each, and
/// rewrites `report` after each one. Rows already in the report with
/// `n_runs == repetitions` and no error are kept unless `force` is set.
/// Per-run timings go to `registry` under `<label>/<mode>/<algorithm>`.
pub fn run_suite(
    config: &SuiteConfig,
    report: &Path,
    registry: &StatsRegistry,
) -> Result<SuiteOutcome, BenchError> {
    let mut rows = if report.exists() {
        read_report(report)?
    } else {
        Vec::new()
    };
    let scratch = tempfile::tempdir().map_err(|source| BenchError::Io {
        path: std::env::temp_dir(),
        source,
    })?;
    let mut outcome = SuiteOutcome::default();

    for spec in &config.workloads {
        let mut input: Option<Result<PathBuf, String>> = None;
        for &algorithm in &config.algorithms {
            for &mode in &config.modes {
                let label = spec.label();
                let key = (
                    label.clone(),
                    mode.short_name().to_string(),
                    algorithm.name().to_string(),
                );
                let existing = rows.iter().position(|r| r.key() == key);
                if let Some(i) = existing {
                    if !config.force && !rows[i].is_failed() && rows[i].n_runs == config.repetitions
                    {
                        outcome.skipped += 1;
                        continue;
                    }
                }
                if spec.kind == WorkloadKind::BatchExecution && input.is_none() {
                    let dir = scratch.path().join(&label);
                    input = Some(
                        gen_workload(spec, &dir, config.seed, 1)
                            .map(|f| f[0].clone())
                            .map_err(|e| e.to_string()),
                    );
                }
                let run_id = format!("{label}/{mode}/{algorithm}");
                let meta = RunMeta {
                    mode,
                    algorithm,
                    load_label: label.clone(),
                };
                let log = registry.create_run(run_id.clone(), meta);
                log::info!("running {label} {mode} {algorithm}");
                let measured = match spec.kind {
                    WorkloadKind::BatchExecution => {
                        match input.as_ref().expect("generated above") {
                            Ok(path) => {
                                measure_batch(config, spec, mode, algorithm, path, scratch.path())
                            }
                            Err(e) => Err(BenchError::InvalidWorkload(e.clone())),
                        }
                    }
                    WorkloadKind::StreamingExecution => {
                        measure_streaming(config, spec, mode, algorithm, scratch.path())
                    }
                };
                let row = match measured {
                    Ok(measured) => {
                        for (rep, &t) in measured.iter().enumerate() {
                            log.record(BatchStats {
                                client_id: label.clone(),
                                window_id: rep as u64,
                                record_count: spec.s_rate,
                                processing_time_ms: t,
                                mode,
                                algorithm,
                                failed: false,
                            });
                        }
                        let timings: Vec<f64> = registry
                            .get_batches(&run_id)?
                            .iter()
                            .map(|s| s.processing_time_ms)
                            .collect();
                        aggregate(&label, mode, algorithm, &timings)
                    }
                    Err(e) => {
                        log::warn!("{label} {mode} {algorithm} failed: {e}");
                        failed_row(&label, mode, algorithm, &e)
                    }
                };
                match existing {
                    Some(i) => rows[i] = row,
                    None => rows.push(row),
                }
                outcome.ran += 1;
                apply_slowdowns(&mut rows);
                write_report(report, &rows)?;
            }
        }
    }
    apply_slowdowns(&mut rows);
    write_report(report, &rows)?;
    outcome.failed = rows
        .iter()
        .filter(|r| r.is_failed() && config.covers(r))
        .count();
    outcome.rows = rows;
    Ok(outcome)
}

fn start_engine(job: JobSpec) -> Result<(Engine, Option<DataOwner>), BenchError> {
    if job.mode == ExecutionMode::SplitEncrypted {
        let mut owner = DataOwner::for_algorithm(job.algorithm);
        let engine = Engine::start(job, Some(&mut owner))?;
        Ok((engine, Some(owner)))
    } else {
        Ok((Engine::start(job, None)?, None))
    }
}

fn fresh_dirs(scratch: &Path, name: &str) -> Result<StreamSourceConfig, BenchError> {
    let root = scratch.join(name);
    let _ = std::fs::remove_dir_all(&root);
    let source = StreamSourceConfig::new(root.join("in"), root.join("out"));
    for dir in [&source.ingest_dir, &source.result_dir] {
        std::fs::create_dir_all(dir).map_err(|source| BenchError::Io {
            path: dir.clone(),
            source,
        })?;
    }
    Ok(source)
}

/// Elapsed milliseconds of `repetitions` batch jobs over one input file.
pub fn measure_batch(
    config: &SuiteConfig,
    spec: &WorkloadSpec,
    mode: ExecutionMode,
    algorithm: AlgorithmKind,
    input: &Path,
    scratch: &Path,
) -> Result<Vec<f64>, BenchError> {
    let source = fresh_dirs(scratch, &format!("{}-{mode}-{algorithm}", spec.label()))?
        .with_interval(config.batch_interval);
    let (engine, owner) = start_engine(JobSpec {
        algorithm: algorithm.into(),
        mode,
        source,
    })?;
    let mut timings = Vec::with_capacity(config.repetitions);
    for _ in 0..config.repetitions {
        let (_, elapsed_ms) = engine.run_batch_job(input, owner.as_ref())?;
        timings.push(elapsed_ms);
    }
    Ok(timings)
}

/// Per repetition, the mean batch-processing time of a streaming run fed
/// one second of the workload per second of virtual time. The first window
/// is left out of the mean when later windows exist.
pub fn measure_streaming(
    config: &SuiteConfig,
    spec: &WorkloadSpec,
    mode: ExecutionMode,
    algorithm: AlgorithmKind,
    scratch: &Path,
) -> Result<Vec<f64>, BenchError> {
    let client = spec.client_id();
    let seconds = config.stream_duration.as_secs();
    let mut timings = Vec::with_capacity(config.repetitions);
    for rep in 0..config.repetitions {
        let source = fresh_dirs(
            scratch,
            &format!("{}-{mode}-{algorithm}-{rep}", spec.label()),
        )?
        .with_interval(config.batch_interval);
        let gateway = GatewayConfig::new(&source.ingest_dir, &source.result_dir);
        let (engine, owner) = start_engine(JobSpec {
            algorithm: algorithm.into(),
            mode,
            source,
        })?;
        let mut sealer = owner.as_ref().and_then(DataOwner::issue_sealer);
        let mut signal = Tachogram::new(config.seed);
        let mut next = 0u64;
        let mut deposit_error = None;
        let mut hook = |now: Duration| {
            while next < seconds && Duration::from_secs(next) <= now {
                let samples = signal.take(spec.s_rate as usize);
                if let Err(e) = gateway_flush(&client, &samples, &gateway, next, sealer.as_mut()) {
                    deposit_error.get_or_insert(e);
                }
                next += 1;
            }
        };
        let report = run_streaming(
            &engine,
            StreamOptions::new(config.stream_duration)
                .virtual_time()
                .with_hook(&mut hook),
        )?;
        if let Some(e) = deposit_error {
            return Err(e.into());
        }
        let failed = report.failed_batches();
        if failed > 0 {
            return Err(BenchError::BatchesFailed {
                failed,
                total: report.stats.len(),
            });
        }
        timings.push(steady_state_mean(&report.stats).ok_or_else(|| {
            BenchError::InvalidWorkload(format!("{} produced no batches", spec.label()))
        })?);
    }
    Ok(timings)
}

/// Mean processing time over windows after the first, or over all windows
/// when there is only one.
pub fn steady_state_mean(stats: &[BatchStats]) -> Option<f64> {
    let later: Vec<f64> = stats
        .iter()
        .filter(|s| s.window_id > 0)
        .map(|s| s.processing_time_ms)
        .collect();
    let values = if later.is_empty() {
        stats.iter().map(|s| s.processing_time_ms).collect()
    } else {
        later
    };
    mean_stddev(&values).ok().map(|(m, _)| m)
}
