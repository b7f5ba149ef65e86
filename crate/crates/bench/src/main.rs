use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use cardio_bench::{
    compare_modes, gen_workload, read_report, run_suite, write_comparison, Scale, SuiteConfig,
    WorkloadKind, WorkloadSpec, BASE_RATES, DEFAULT_CV_THRESHOLD, DEFAULT_REPETITIONS,
    FULL_STREAM_DURATION,
};
use cardio_client::{run_fleet, FleetConfig, FleetTiming};
use cardio_core::{AlgorithmKind, ExecutionMode};
use cardio_enclave::DataOwner;
use cardio_engine::{run_streaming, Engine, EngineConfig, StreamOptions};
use cardio_metrics::{MetricsServer, RunMeta, StatsRegistry};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bench",
    about = "Workload generator and benchmark harness for the cardiac stream engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one workload of the load lattice.
    Gen {
        #[arg(long, value_parser = parse_kind)]
        kind: WorkloadKind,
        #[arg(long, value_parser = parse_scale)]
        scale: Scale,
        /// Small-load rate (44, 89, 178, 356, 712 or 1424).
        #[arg(long)]
        rate: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = cardio_bench::workload::DEFAULT_SEED)]
        seed: u64,
        /// Seconds of replay for a streaming workload.
        #[arg(long, default_value_t = 10)]
        seconds: u64,
    },
    /// Run every configuration and write the report.
    Run {
        #[arg(long, value_delimiter = ',', default_value = "baseline,split,enclave", value_parser = parse_mode)]
        modes: Vec<ExecutionMode>,
        #[arg(long, value_delimiter = ',', default_value = "identity,sdnn,hrvbands", value_parser = parse_algo)]
        algos: Vec<AlgorithmKind>,
        #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
        reps: usize,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "be,se", value_parser = parse_kind)]
        kinds: Vec<WorkloadKind>,
        #[arg(long, value_delimiter = ',', default_value = "small", value_parser = parse_scale)]
        scales: Vec<Scale>,
        #[arg(long, value_delimiter = ',')]
        rates: Vec<u64>,
        /// Seconds per streaming repetition.
        #[arg(long, default_value_t = 60)]
        duration: u64,
        /// Five-minute streaming repetitions.
        #[arg(long)]
        full_duration: bool,
        /// Batch interval in seconds for streaming workloads.
        #[arg(long, default_value_t = 10.0)]
        interval: f64,
        #[arg(long, default_value_t = cardio_bench::workload::DEFAULT_SEED)]
        seed: u64,
        /// Re-run configurations that already have complete rows.
        #[arg(long)]
        force: bool,
        /// Serve per-run timings over HTTP while the suite runs.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Slow-down table from a report.
    Compare {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CV_THRESHOLD)]
        cv_threshold: f64,
    },
    /// Run the streaming engine from a config file, optionally with a
    /// simulated client fleet, and serve its batch statistics.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        fleet: Option<PathBuf>,
        /// Seconds to run; defaults to the fleet duration, else 60.
        #[arg(long)]
        duration: Option<u64>,
        #[arg(long, default_value = "run")]
        run_id: String,
    },
}

fn parse_kind(s: &str) -> Result<WorkloadKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_scale(s: &str) -> Result<Scale, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_mode(s: &str) -> Result<ExecutionMode, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_algo(s: &str) -> Result<AlgorithmKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

type Outcome = Result<ExitCode, String>;

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let result = match Cli::parse().command {
        Command::Gen {
            kind,
            scale,
            rate,
            out,
            seed,
            seconds,
        } => gen(kind, scale, rate, out, seed, seconds),
        Command::Run {
            modes,
            algos,
            reps,
            report,
            kinds,
            scales,
            rates,
            duration,
            full_duration,
            interval,
            seed,
            force,
            listen,
        } => {
            let rates = if rates.is_empty() {
                BASE_RATES.to_vec()
            } else {
                rates
            };
            let mut workloads = Vec::new();
            for &kind in &kinds {
                for &scale in &scales {
                    for &rate in &rates {
                        match WorkloadSpec::new(kind, scale, rate) {
                            Ok(w) => workloads.push(w),
                            Err(e) => return report_error(e),
                        }
                    }
                }
            }
            if !(interval.is_finite() && interval > 0.0) {
                return report_error("interval must be positive");
            }
            let config = SuiteConfig {
                modes,
                algorithms: algos,
                repetitions: reps.max(1),
                stream_duration: if full_duration {
                    FULL_STREAM_DURATION
                } else {
                    Duration::from_secs(duration.max(1))
                },
                batch_interval: Duration::from_secs_f64(interval),
                seed,
                force,
                ..SuiteConfig::new(workloads)
            };
            run(config, report, listen)
        }
        Command::Compare {
            report,
            out,
            cv_threshold,
        } => compare(report, out, cv_threshold),
        Command::Serve {
            config,
            fleet,
            duration,
            run_id,
        } => serve(config, fleet, duration, run_id),
    };
    match result {
        Ok(code) => code,
        Err(e) => report_error(e),
    }
}

fn report_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::FAILURE
}

fn gen(
    kind: WorkloadKind,
    scale: Scale,
    rate: u64,
    out: PathBuf,
    seed: u64,
    seconds: u64,
) -> Outcome {
    let spec = WorkloadSpec::new(kind, scale, rate).map_err(fail)?;
    let files = gen_workload(&spec, &out, seed, seconds).map_err(fail)?;
    let mut total = 0;
    for f in &files {
        total += std::fs::metadata(f).map(|m| m.len()).unwrap_or(0);
    }
    println!(
        "{}: {} file(s), {} bytes, target {} bytes{}",
        spec.label(),
        files.len(),
        total,
        spec.target_size,
        if kind == WorkloadKind::StreamingExecution {
            " per second"
        } else {
            ""
        }
    );
    Ok(ExitCode::SUCCESS)
}

fn run(config: SuiteConfig, report: PathBuf, listen: Option<String>) -> Outcome {
    let registry = Arc::new(StatsRegistry::new());
    let server = match listen {
        Some(addr) => {
            let server =
                MetricsServer::start(addr.as_str(), Arc::clone(&registry)).map_err(fail)?;
            log::info!(
                "serving run statistics on http://{}/api/v1/runs/",
                server.local_addr()
            );
            Some(server)
        }
        None => None,
    };
    let outcome = run_suite(&config, &report, &registry).map_err(fail)?;
    if let Some(s) = server {
        s.shutdown();
    }
    println!(
        "{} configuration(s) run, {} skipped, {} failed; report in {}",
        outcome.ran,
        outcome.skipped,
        outcome.failed,
        report.display()
    );
    Ok(if outcome.failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn compare(report: PathBuf, out: PathBuf, cv_threshold: f64) -> Outcome {
    let rows = read_report(&report).map_err(fail)?;
    let comparison = compare_modes(&rows, cv_threshold).map_err(fail)?;
    write_comparison(&out, &comparison).map_err(fail)?;
    match &comparison.variance_threshold {
        Some(w) => println!("variance threshold reached at {w} (stddev/mean > {cv_threshold})"),
        None => println!("no workload exceeds stddev/mean {cv_threshold}"),
    }
    println!(
        "{} row(s) written to {}",
        comparison.rows.len(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn serve(
    config: PathBuf,
    fleet: Option<PathBuf>,
    duration: Option<u64>,
    run_id: String,
) -> Outcome {
    let config = EngineConfig::load(&config).map_err(fail)?;
    let fleet = fleet
        .map(|p| FleetConfig::load(&p))
        .transpose()
        .map_err(fail)?;
    let duration = match (duration, &fleet) {
        (Some(s), _) => Duration::from_secs(s),
        (None, Some(f)) => f.duration,
        (None, None) => Duration::from_secs(60),
    };
    let job = config.job.clone();
    let (engine, owner) = if job.mode == ExecutionMode::SplitEncrypted {
        let mut owner = DataOwner::for_algorithm(job.algorithm);
        let engine = Engine::start(job.clone(), Some(&mut owner)).map_err(fail)?;
        (engine, Some(Arc::new(owner)))
    } else {
        (Engine::start(job.clone(), None).map_err(fail)?, None)
    };

    let registry = Arc::new(StatsRegistry::new());
    let label = job.source.ingest_dir.display().to_string();
    let log = registry.create_run(
        run_id.clone(),
        RunMeta {
            mode: job.mode,
            algorithm: job.algorithm.kind,
            load_label: label,
        },
    );
    let server = match &config.metrics_listen {
        Some(addr) => {
            let server =
                MetricsServer::start(addr.as_str(), Arc::clone(&registry)).map_err(fail)?;
            println!(
                "batches: http://{}/api/v1/runs/{run_id}/batches",
                server.local_addr()
            );
            Some(server)
        }
        None => None,
    };

    let report = std::thread::scope(|s| {
        let clients = fleet.as_ref().map(|f| {
            let owner = owner.clone();
            s.spawn(move || {
                run_fleet(
                    f,
                    FleetTiming::RealTime {
                        step: Duration::from_millis(100),
                    },
                    owner,
                )
            })
        });
        let report = run_streaming(&engine, StreamOptions::new(duration).with_log(log));
        if let Some(h) = clients {
            match h.join().expect("fleet thread panicked") {
                Ok(r) => {
                    for (client, deposited, fetched) in r.reconcile() {
                        println!("{client}: {deposited} deposited, {fetched} results fetched");
                    }
                }
                Err(e) => log::warn!("fleet failed: {e}"),
            }
        }
        report
    });
    if let Some(s) = server {
        s.shutdown();
    }
    let report = report.map_err(fail)?;
    println!(
        "{} window(s), {} batch(es), {} failed, {} quarantined file(s)",
        report.windows,
        report.stats.len(),
        report.failed_batches(),
        report.quarantined.len()
    );
    Ok(if report.failed_batches() > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}
