//! One client as a sequential loop: the sensor fills a queue, the gateway
//! flushes it every batch period and polls for results every fetch period.
//! Driven by `tick` so it can run on a real or a simulated clock.

use std::collections::{HashSet, VecDeque};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use cardio_core::{ClientId, RrSample, RECORD_LEN};
use cardio_enclave::{CipherEnvelope, DataOwner, Sealer};

use crate::error::ClientError;
use crate::gateway::{fetch_results, gateway_flush, FetchedResult, GatewayConfig};
use crate::sensor::{generate_rr, SensorConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deposit {
    pub file: PathBuf,
    pub seq: u64,
    pub records: usize,
    pub bytes: u64,
}

/// A fetched result as the client reads it. In sealed deployments the body
/// is what the data owner's key opens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceivedResult {
    pub file: String,
    pub window_id: u64,
    pub ok: bool,
    pub body: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClientReport {
    pub client_id: String,
    pub deposits: Vec<Deposit>,
    pub results: Vec<ReceivedResult>,
    pub errors: Vec<String>,
}

impl ClientReport {
    pub fn records_deposited(&self) -> usize {
        self.deposits.iter().map(|d| d.records).sum()
    }
}

pub struct ClientService {
    client_id: ClientId,
    gateway: GatewayConfig,
    stream: Vec<RrSample>,
    start_ms: u64,
    next_sample: usize,
    queue: VecDeque<RrSample>,
    seq: u64,
    next_flush: Duration,
    next_fetch: Duration,
    sealer: Option<Sealer>,
    owner: Option<Arc<DataOwner>>,
    seen: HashSet<String>,
    report: ClientReport,
}

impl ClientService {
    /// Pre-generates the sensor stream for `duration`. With an owner, deposits
    /// are sealed under a sealer it issues and results are opened with its key.
    pub fn new(
        sensor: &SensorConfig,
        gateway: GatewayConfig,
        duration: Duration,
        owner: Option<Arc<DataOwner>>,
    ) -> Result<Self, ClientError> {
        gateway.validate()?;
        let stream = generate_rr(sensor, duration)?.into_samples();
        let sealer = match &owner {
            Some(o) => Some(
                o.issue_sealer()
                    .ok_or_else(|| ClientError::InvalidFleet("owner has no session".into()))?,
            ),
            None => None,
        };
        Ok(ClientService {
            client_id: sensor.client_id.clone(),
            next_flush: gateway.batch_period,
            next_fetch: gateway.fetch_period,
            gateway,
            stream,
            start_ms: sensor.start_ms,
            next_sample: 0,
            queue: VecDeque::new(),
            seq: 0,
            sealer,
            owner,
            seen: HashSet::new(),
            report: ClientReport {
                client_id: sensor.client_id.to_string(),
                ..ClientReport::default()
            },
        })
    }

    pub fn client_id(&self) -> &ClientId {
        &self.client_id
    }

    pub fn report(&self) -> &ClientReport {
        &self.report
    }

    /// Advances the client to `now` (time since it started). Errors are
    /// recorded in the report; the loop carries on.
    pub fn tick(&mut self, now: Duration) {
        let now_ms = self.start_ms + now.as_millis() as u64;
        while let Some(s) = self
            .stream
            .get(self.next_sample)
            .filter(|s| s.t_ms <= now_ms)
        {
            self.queue.push_back(*s);
            self.next_sample += 1;
        }
        while now >= self.next_flush {
            self.next_flush += self.gateway.batch_period;
            self.flush();
        }
        while now >= self.next_fetch {
            self.next_fetch += self.gateway.fetch_period;
            self.fetch();
        }
    }

    fn flush(&mut self) {
        if self.queue.is_empty() {
            return;
        }
        let batch: Vec<RrSample> = self.queue.drain(..).collect();
        match gateway_flush(
            &self.client_id,
            &batch,
            &self.gateway,
            self.seq,
            self.sealer.as_mut(),
        ) {
            Ok(file) => {
                let bytes = std::fs::metadata(&file).map(|m| m.len()).unwrap_or(0);
                self.report.deposits.push(Deposit {
                    file,
                    seq: self.seq,
                    records: batch.len(),
                    bytes,
                });
                self.seq += 1;
            }
            Err(e) => {
                log::warn!("{}: {e}", self.client_id);
                self.report.errors.push(e.to_string());
            }
        }
    }

    pub fn fetch(&mut self) {
        match fetch_results(&self.client_id, &self.gateway, &mut self.seen) {
            Ok(found) => {
                for r in found {
                    match self.read(r) {
                        Ok(r) => self.report.results.push(r),
                        Err(e) => self.report.errors.push(e.to_string()),
                    }
                }
            }
            Err(e) => self.report.errors.push(e.to_string()),
        }
    }

    fn read(&self, r: FetchedResult) -> Result<ReceivedResult, ClientError> {
        let (ok, body) = match &self.owner {
            Some(owner) => {
                let sealed = || ClientError::SealedResult {
                    file: r.file.clone(),
                };
                let env = CipherEnvelope::from_bytes(&r.bytes).map_err(|_| sealed())?;
                let (aad, ok, body) = owner.open_reply(&env).map_err(|_| sealed())?;
                if aad.client_id != self.client_id || aad.window_id != r.window_id {
                    return Err(sealed());
                }
                (ok, body)
            }
            None => (true, r.bytes),
        };
        let body = String::from_utf8(body).map_err(|_| ClientError::SealedResult {
            file: r.file.clone(),
        })?;
        Ok(ReceivedResult {
            file: r.file,
            window_id: r.window_id,
            ok,
            body,
        })
    }

    /// Flushes what is left, fetches once more, and returns the report.
    pub fn finish(mut self) -> ClientReport {
        self.flush();
        self.fetch();
        self.report
    }

    /// Serialized bytes the sensor has produced so far.
    pub fn sensed_bytes(&self) -> usize {
        self.next_sample * RECORD_LEN
    }
}
