//! Benchmark harness: generates the input-load lattice, runs each
//! (workload, mode, algorithm) configuration repeatedly and reports
//! slow-down factors between execution modes.

pub mod compare;
pub mod error;
pub mod reference;
pub mod suite;
pub mod workload;

pub use compare::{
    compare_modes, write_comparison, Comparison, ComparisonRow, DEFAULT_CV_THRESHOLD,
};
pub use error::BenchError;
pub use suite::{
    aggregate, apply_slowdowns, failed_row, measure_batch, measure_streaming, read_report,
    run_suite, steady_state_mean, write_report, ReportRow, SuiteConfig, SuiteOutcome,
    DEFAULT_REPETITIONS, DEFAULT_STREAM_DURATION, FULL_STREAM_DURATION,
};
pub use workload::{
    gen_workload, Scale, Tachogram, WorkloadKind, WorkloadSpec, BASE_RATES, BASE_SIZES, BIG_FACTOR,
};
