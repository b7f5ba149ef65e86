//! Batch processing-time statistics: an append-only log per run, run
//! summaries, and a small read-only HTTP endpoint for harvesting them.

pub mod error;
pub mod server;
pub mod stats;
pub mod summary;

pub use error::MetricsError;
pub use server::{http_get, route, MetricsServer};
pub use stats::{BatchStats, RunMeta, StatsLog, StatsRegistry};
pub use summary::{mean_stddev, summarize, RunSummary};
