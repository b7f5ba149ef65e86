//! Job and source configuration, and the key=value engine config file.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

pub use cardio_core::naming::{parse_result_file_name, result_file_name};
use cardio_core::{AnalysisAlgorithm, ClientId, ExecutionMode};

use crate::error::EngineError;

/// Maps ingest file names `<client_id><sep><seq>.<ext>` to client and
/// sequence. The client is everything before the last separator, so ids
/// may themselves contain the separator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientPattern {
    pub separator: char,
    pub extension: String,
}

impl Default for ClientPattern {
    fn default() -> Self {
        ClientPattern {
            separator: '_',
            extension: "csv".into(),
        }
    }
}

impl ClientPattern {
    pub fn parse(&self, file_name: &str) -> Option<(ClientId, u64)> {
        let stem = file_name.strip_suffix(&self.extension)?.strip_suffix('.')?;
        let (client, seq) = stem.rsplit_once(self.separator)?;
        if seq.is_empty() || !seq.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        Some((ClientId::new(client).ok()?, seq.parse().ok()?))
    }

    pub fn file_name(&self, client: &ClientId, seq: u64) -> String {
        format!("{}{}{seq}.{}", client, self.separator, self.extension)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamSourceConfig {
    pub ingest_dir: PathBuf,
    pub result_dir: PathBuf,
    pub batch_interval: Duration,
    pub client_pattern: ClientPattern,
}

impl StreamSourceConfig {
    pub const DEFAULT_INTERVAL: Duration = Duration::from_secs(10);

    pub fn new(ingest_dir: impl Into<PathBuf>, result_dir: impl Into<PathBuf>) -> Self {
        StreamSourceConfig {
            ingest_dir: ingest_dir.into(),
            result_dir: result_dir.into(),
            batch_interval: Self::DEFAULT_INTERVAL,
            client_pattern: ClientPattern::default(),
        }
    }

    pub fn with_interval(mut self, interval: Duration) -> Self {
        self.batch_interval = interval;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.batch_interval.is_zero() {
            return Err(EngineError::InvalidConfig(
                "batch interval must be positive".into(),
            ));
        }
        if same_dir(&self.ingest_dir, &self.result_dir) {
            return Err(EngineError::InvalidConfig(
                "ingest_dir and result_dir must differ".into(),
            ));
        }
        Ok(())
    }

    pub fn quarantine_dir(&self) -> PathBuf {
        self.ingest_dir.join(".quarantine")
    }
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => a == b,
    }
}

/// What to run. Fixed for the lifetime of an engine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobSpec {
    pub algorithm: AnalysisAlgorithm,
    pub mode: ExecutionMode,
    pub source: StreamSourceConfig,
}

/// Parsed engine config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineConfig {
    pub job: JobSpec,
    pub metrics_listen: Option<String>,
}

impl EngineConfig {
    pub fn load(path: &Path) -> Result<Self, EngineError> {
        let text = std::fs::read_to_string(path).map_err(|source| EngineError::Io {
            path: path.into(),
            source,
        })?;
        text.parse()
    }
}

impl FromStr for EngineConfig {
    type Err = EngineError;

    /// Lines of `key = value`; `#` starts a comment. Keys: `ingest_dir`,
    /// `result_dir`, `interval` (seconds), `algorithm`, `mode`, `listen`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = |m: String| EngineError::InvalidConfig(m);
        let (mut ingest, mut result, mut listen) = (None, None, None);
        let mut interval = StreamSourceConfig::DEFAULT_INTERVAL;
        let mut algorithm = None;
        let mut mode = ExecutionMode::Baseline;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line {}: expected key=value", n + 1)))?;
            let value = value.trim();
            match key.trim() {
                "ingest_dir" => ingest = Some(PathBuf::from(value)),
                "result_dir" => result = Some(PathBuf::from(value)),
                "interval" | "batch_interval_s" => {
                    let secs: f64 = value
                        .parse()
                        .map_err(|_| bad(format!("bad interval {value:?}")))?;
                    if !(secs.is_finite() && secs > 0.0) {
                        return Err(bad(format!("interval must be positive, got {value}")));
                    }
                    interval = Duration::from_secs_f64(secs);
                }
                "algorithm" => algorithm = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
                "mode" => mode = value.parse().map_err(|e| bad(format!("{e}")))?,
                "listen" | "metrics_listen" => listen = Some(value.to_string()),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        let source = StreamSourceConfig {
            ingest_dir: ingest.ok_or_else(|| bad("missing ingest_dir".into()))?,
            result_dir: result.ok_or_else(|| bad("missing result_dir".into()))?,
            batch_interval: interval,
            client_pattern: ClientPattern::default(),
        };
        source.validate()?;
        let algorithm = algorithm.ok_or_else(|| bad("missing algorithm".into()))?;
        Ok(EngineConfig {
            job: JobSpec {
                algorithm,
                mode,
                source,
            },
            metrics_listen: listen,
        })
    }
}
