//! The window scheduler. One thread drives the clock and scans the source;
//! an executor thread forms and runs each window's batches and is drained
//! before the run returns.

use std::collections::HashSet;
use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use cardio_metrics::{BatchStats, StatsLog};
use crossbeam_channel::unbounded;

use crate::clock::{Clock, SystemClock, VirtualClock};
use crate::engine::{BatchOutcome, Engine};
use crate::error::EngineError;
use crate::source::{scan_source, IngestFile, MicroBatch, Quarantined};

pub struct StreamOptions<'h> {
    pub duration: Duration,
    pub clock: Arc<dyn Clock>,
    /// Source scans per window. The scan period is the interval divided by
    /// this.
    pub scans_per_window: u32,
    /// Upper bound on batches of one window executed at once.
    pub parallelism: usize,
    pub log: Option<Arc<StatsLog>>,
    /// Called on the clock thread at every scan tick, before the scan, with
    /// the time since the start of the run.
    pub hook: Option<&'h mut dyn FnMut(Duration)>,
}

impl<'h> StreamOptions<'h> {
    pub fn new(duration: Duration) -> Self {
        StreamOptions {
            duration,
            clock: Arc::new(SystemClock::new()),
            scans_per_window: 10,
            parallelism: std::thread::available_parallelism()
                .map(NonZeroUsize::get)
                .unwrap_or(1),
            log: None,
            hook: None,
        }
    }

    pub fn virtual_time(mut self) -> Self {
        self.clock = Arc::new(VirtualClock::new());
        self
    }

    pub fn with_log(mut self, log: Arc<StatsLog>) -> Self {
        self.log = Some(log);
        self
    }

    pub fn with_hook(mut self, hook: &'h mut dyn FnMut(Duration)) -> Self {
        self.hook = Some(hook);
        self
    }
}

#[derive(Debug, Default)]
pub struct RunReport {
    /// One entry per non-empty (client, window), in execution order.
    pub stats: Vec<BatchStats>,
    pub windows: u64,
    /// `(window_id, file)` for every file that went into a batch.
    pub ingested: Vec<(u64, String)>,
    pub quarantined: Vec<Quarantined>,
    pub result_files: Vec<PathBuf>,
}

impl RunReport {
    pub fn failed_batches(&self) -> usize {
        self.stats.iter().filter(|s| s.failed).count()
    }
}

struct WindowWork {
    window_id: u64,
    start: Duration,
    files: Vec<IngestFile>,
}

/// Drives windows `[k·I, (k+1)·I)` for the run duration. Each window is
/// scanned `scans_per_window` times from its start, plus once just before
/// its end, and every file observed goes into that window.
pub fn run_streaming(engine: &Engine, opts: StreamOptions<'_>) -> Result<RunReport, EngineError> {
    let StreamOptions {
        duration,
        clock,
        scans_per_window,
        parallelism,
        log,
        mut hook,
    } = opts;
    let source = &engine.job().source;
    let interval = source.batch_interval;
    let scans = scans_per_window.max(1);
    let period = interval / scans;
    let closing_gap = Duration::from_millis(1).min(period / 2);
    let windows = (duration.as_nanos()).div_ceil(interval.as_nanos()) as u64;

    let (tx, rx) = unbounded::<WindowWork>();
    std::thread::scope(|scope| {
        let executor = scope.spawn(|| {
            let mut report = RunReport {
                windows,
                ..RunReport::default()
            };
            for work in rx {
                let start_ms = work.start.as_millis() as u64;
                let formed = engine.former().form(&work.files, work.window_id, start_ms);
                report.quarantined.extend(formed.quarantined);
                for b in &formed.batches {
                    report
                        .ingested
                        .extend(b.files.iter().map(|f| (b.window_id, f.clone())));
                }
                for outcome in execute_window(engine, &formed.batches, parallelism) {
                    if let Some(log) = &log {
                        log.record(outcome.stats.clone());
                    }
                    report.result_files.extend(outcome.result_file);
                    report.stats.push(outcome.stats);
                }
            }
            report
        });

        let mut seen = HashSet::new();
        let mut failure = None;
        'windows: for k in 0..windows {
            let start = interval * k as u32;
            let mut files = Vec::new();
            let ticks = (0..scans)
                .map(|j| (start + period * j, true))
                .chain([(start + interval - closing_gap, false)]);
            for (t, call_hook) in ticks {
                clock.sleep_until(t);
                if call_hook {
                    if let Some(h) = hook.as_mut() {
                        h(t);
                    }
                }
                match scan_source(source, &mut seen) {
                    Ok(found) => files.extend(found),
                    Err(e) => {
                        failure = Some(e);
                        let _ = tx.send(WindowWork {
                            window_id: k,
                            start,
                            files,
                        });
                        break 'windows;
                    }
                }
            }
            let _ = tx.send(WindowWork {
                window_id: k,
                start,
                files,
            });
        }
        drop(tx);
        let report = executor.join().expect("executor thread panicked");
        match failure {
            Some(e) => Err(e),
            None => Ok(report),
        }
    })
}

/// Batches of one window are for distinct clients and may run
/// concurrently. Outcomes come back in batch order.
fn execute_window(
    engine: &Engine,
    batches: &[MicroBatch],
    parallelism: usize,
) -> Vec<BatchOutcome> {
    let lanes = parallelism.clamp(1, batches.len().max(1));
    if lanes == 1 {
        return batches.iter().map(|b| engine.process_batch(b)).collect();
    }
    let mut slots: Vec<Option<BatchOutcome>> = (0..batches.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..lanes)
            .map(|lane| {
                scope.spawn(move || {
                    batches
                        .iter()
                        .enumerate()
                        .skip(lane)
                        .step_by(lanes)
                        .map(|(i, b)| (i, engine.process_batch(b)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, outcome) in h.join().expect("batch lane panicked") {
                slots[i] = Some(outcome);
            }
        }
    });
    slots
        .into_iter()
        .map(|o| o.expect("every batch ran"))
        .collect()
}
