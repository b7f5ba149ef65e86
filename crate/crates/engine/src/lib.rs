//! File-based micro-batch streaming engine.
//!
//! Clients drop `<client_id>_<seq>.csv` files into the ingest directory.
//! Every batch interval the engine groups the files it observed by client,
//! runs the configured algorithm on each group in one of three execution
//! modes, and writes `<client_id>_<window_id>.out` into the result
//! directory.
//!
//! - `Baseline`: the algorithm runs in-process.
//! - `SplitPlain`: batches cross a channel in the clear to a separate
//!   worker that computes.
//! - `SplitEncrypted`: the worker hosts an attested trusted runtime. Clients
//!   deposit sealed files and result files are sealed replies, so the host
//!   handles ciphertext only.

pub mod clock;
pub mod config;
pub mod engine;
pub mod error;
pub mod sink;
pub mod source;
pub mod streaming;
pub mod tap;
pub mod worker;

pub use clock::{Clock, SystemClock, VirtualClock};
pub use config::{
    parse_result_file_name, result_file_name, ClientPattern, EngineConfig, JobSpec,
    StreamSourceConfig,
};
pub use engine::{BatchOutcome, Engine};
pub use error::EngineError;
pub use sink::{write_result, ResultPayload};
pub use source::{
    form_batches, scan_source, BatchFormer, BatchPayload, FormedWindow, IngestEncoding, IngestFile,
    MicroBatch, Quarantined, IN_PROGRESS_SUFFIX,
};
pub use streaming::{run_streaming, RunReport, StreamOptions};
pub use tap::{ByteTap, TapPoint};
pub use worker::TrustedWorker;
