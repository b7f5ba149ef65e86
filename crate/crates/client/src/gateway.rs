//! Gateway side of the shared directory: deposits batches of records and
//! fetches result files.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use cardio_core::naming::{ingest_file_name, parse_result_file_name};
use cardio_core::{encode_records, ClientId, RrSample};
use cardio_enclave::{ChannelAad, Direction, Sealer};

use crate::error::ClientError;

pub const DEPOSIT_ATTEMPTS: u32 = 4;
const BACKOFF_START: Duration = Duration::from_millis(10);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GatewayConfig {
    pub batch_period: Duration,
    pub deposit_dir: PathBuf,
    pub fetch_period: Duration,
    pub fetch_dir: PathBuf,
}

impl GatewayConfig {
    pub const DEFAULT_BATCH_PERIOD: Duration = Duration::from_secs(10);
    pub const DEFAULT_FETCH_PERIOD: Duration = Duration::from_secs(5);

    pub fn new(deposit_dir: impl Into<PathBuf>, fetch_dir: impl Into<PathBuf>) -> Self {
        GatewayConfig {
            batch_period: Self::DEFAULT_BATCH_PERIOD,
            deposit_dir: deposit_dir.into(),
            fetch_period: Self::DEFAULT_FETCH_PERIOD,
            fetch_dir: fetch_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if self.batch_period.is_zero() || self.fetch_period.is_zero() {
            return Err(ClientError::InvalidFleet(
                "gateway periods must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Writes `<client_id>_<seq>.csv` as `.part` then renames it. With a sealer
/// the body is one sealed deposit envelope, otherwise the raw records.
/// Retries a few times with doubling backoff before giving up.
pub fn gateway_flush(
    client_id: &ClientId,
    samples: &[RrSample],
    config: &GatewayConfig,
    seq: u64,
    sealer: Option<&mut Sealer>,
) -> Result<PathBuf, ClientError> {
    if samples.is_empty() {
        return Err(ClientError::EmptyDeposit);
    }
    let records = encode_records(samples)?;
    let body = match sealer {
        Some(s) => s
            .seal_for(
                &records,
                &ChannelAad::new(client_id.clone(), seq, Direction::Deposit),
            )
            .map_err(|e| ClientError::InvalidFleet(format!("cannot seal deposit: {e}")))?
            .to_bytes(),
        None => records,
    };
    let name = ingest_file_name(client_id, seq);
    let mut backoff = BACKOFF_START;
    let mut attempt = 1;
    loop {
        match write_deposit(&config.deposit_dir, &name, &body, false) {
            Ok(p) => return Ok(p),
            Err(source) if attempt >= DEPOSIT_ATTEMPTS => {
                return Err(ClientError::DepositUnavailable {
                    path: config.deposit_dir.clone(),
                    attempts: attempt,
                    source,
                })
            }
            Err(e) => {
                log::debug!("deposit {name} attempt {attempt} failed: {e}");
                std::thread::sleep(backoff);
                backoff *= 2;
                attempt += 1;
            }
        }
    }
}

fn write_deposit(
    dir: &Path,
    name: &str,
    body: &[u8],
    crash_before_rename: bool,
) -> std::io::Result<PathBuf> {
    let part = dir.join(format!("{name}.part"));
    std::fs::write(&part, body)?;
    if crash_before_rename {
        return Err(std::io::Error::new(
            std::io::ErrorKind::Interrupted,
            "interrupted before rename",
        ));
    }
    let target = dir.join(name);
    std::fs::rename(&part, &target)?;
    Ok(target)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchedResult {
    pub file: String,
    pub window_id: u64,
    pub bytes: Vec<u8>,
}

/// Complete result files for `client_id` not yet in `seen`, ordered by
/// window. Other clients' files are never returned.
pub fn fetch_results(
    client_id: &ClientId,
    config: &GatewayConfig,
    seen: &mut HashSet<String>,
) -> Result<Vec<FetchedResult>, ClientError> {
    let unavailable = |source| ClientError::FetchUnavailable {
        path: config.fetch_dir.clone(),
        source,
    };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(&config.fetch_dir).map_err(unavailable)? {
        let entry = entry.map_err(unavailable)?;
        let Ok(name) = entry.file_name().into_string() else {
            continue;
        };
        if seen.contains(&name) {
            continue;
        }
        let Some((owner, window_id)) = parse_result_file_name(&name) else {
            continue;
        };
        if &owner != client_id {
            continue;
        }
        let bytes = std::fs::read(entry.path()).map_err(unavailable)?;
        seen.insert(name.clone());
        out.push(FetchedResult {
            file: name,
            window_id,
            bytes,
        });
    }
    out.sort_by_key(|r| r.window_id);
    Ok(out)
}
