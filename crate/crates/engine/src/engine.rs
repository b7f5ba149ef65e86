use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use cardio_core::{
    encode_plain_batch, parse_records, parse_result_body, BatchHeader, ClientId, ExecutionMode,
    HrvResult, RrGuard, RrSeries,
};
use cardio_enclave::{
    compute_body, reply_failed, ChannelAad, CipherEnvelope, DataOwner, Direction, SessionInfo,
    TrustedRuntime,
};
use cardio_metrics::BatchStats;

use crate::config::JobSpec;
use crate::error::EngineError;
use crate::sink::{write_result, ResultPayload};
use crate::source::{BatchFormer, BatchPayload, IngestEncoding, MicroBatch};
use crate::tap::{ByteTap, TapPoint};
use crate::worker::TrustedWorker;

/// Outcome of one batch: its stats entry, and the result file unless the
/// batch failed.
#[derive(Debug)]
pub struct BatchOutcome {
    pub stats: BatchStats,
    pub result_file: Option<PathBuf>,
    pub error: Option<EngineError>,
}

/// A configured engine. In the split modes it owns the trusted worker; in
/// sealed mode that worker's runtime has been attested by the data owner
/// before `start` returns.
pub struct Engine {
    job: JobSpec,
    worker: Option<TrustedWorker>,
    tap: Arc<ByteTap>,
    guard: RrGuard,
    session: Option<SessionInfo>,
}

impl Engine {
    pub fn start(job: JobSpec, owner: Option<&mut DataOwner>) -> Result<Self, EngineError> {
        Self::start_with_tap(job, owner, Arc::new(ByteTap::disabled()))
    }

    pub fn start_with_tap(
        job: JobSpec,
        owner: Option<&mut DataOwner>,
        tap: Arc<ByteTap>,
    ) -> Result<Self, EngineError> {
        job.source.validate()?;
        let mut session = None;
        let worker = match job.mode {
            ExecutionMode::Baseline => None,
            ExecutionMode::SplitPlain => {
                Some(TrustedWorker::plain(job.algorithm, Arc::clone(&tap)))
            }
            ExecutionMode::SplitEncrypted => {
                let owner = owner.ok_or(EngineError::MissingOwner)?;
                let worker =
                    TrustedWorker::trusted(TrustedRuntime::create(job.algorithm), Arc::clone(&tap));
                // The host only relays: challenge out, report back, share out.
                let report = worker.attest(*owner.expected(), owner.challenge())?;
                let share = owner
                    .accept(&report)
                    .map_err(EngineError::AttestationFailed)?;
                session = Some(worker.establish_session(report, share)?);
                Some(worker)
            }
        };
        Ok(Engine {
            job,
            worker,
            tap,
            guard: RrGuard::default(),
            session,
        })
    }

    pub fn job(&self) -> &JobSpec {
        &self.job
    }

    pub fn tap(&self) -> &Arc<ByteTap> {
        &self.tap
    }

    pub fn session(&self) -> Option<SessionInfo> {
        self.session
    }

    pub fn ingest_encoding(&self) -> IngestEncoding {
        match self.job.mode {
            ExecutionMode::SplitEncrypted => IngestEncoding::Sealed,
            _ => IngestEncoding::Records,
        }
    }

    pub fn former(&self) -> BatchFormer<'_> {
        BatchFormer {
            source: &self.job.source,
            encoding: self.ingest_encoding(),
            guard: self.guard,
            tap: &self.tap,
        }
    }

    fn worker(&self) -> Result<&TrustedWorker, EngineError> {
        self.worker.as_ref().ok_or(EngineError::ChannelClosed)
    }

    /// Closes the channel to the trusted worker. Batches executed afterwards
    /// fail with `ChannelClosed`.
    pub fn close_channel(&self) {
        if let Some(w) = &self.worker {
            w.close();
        }
    }

    /// Runs the job's algorithm over one batch in the job's mode.
    pub fn execute_batch(&self, batch: &MicroBatch) -> Result<ResultPayload, EngineError> {
        let header = BatchHeader {
            client_id: batch.client_id.clone(),
            window_id: batch.window_id,
            window_start_ms: batch.window_start_ms,
        };
        match (self.job.mode, &batch.payload) {
            (ExecutionMode::Baseline, BatchPayload::Plain(series)) => {
                compute_body(self.job.algorithm, series)
                    .map(ResultPayload::Plain)
                    .map_err(|e| EngineError::failed(e.kind()))
            }
            (ExecutionMode::SplitPlain, BatchPayload::Plain(series)) => {
                let bytes = encode_plain_batch(&header, series)?;
                match self.worker()?.run_plain(bytes)? {
                    Ok(body) => Ok(ResultPayload::Plain(body)),
                    Err(kind) => Err(EngineError::failed(kind)),
                }
            }
            (ExecutionMode::SplitEncrypted, BatchPayload::Sealed(deposits)) => {
                let reply = self.worker()?.run_deposits(&header, deposits)?;
                check_reply_address(&reply, &batch.client_id, batch.window_id)?;
                if reply_failed(&reply) {
                    return Err(EngineError::BatchFailed { kind: None });
                }
                Ok(ResultPayload::Sealed(reply))
            }
            (mode, _) => Err(EngineError::InvalidConfig(format!(
                "{mode:?} cannot execute this batch payload"
            ))),
        }
    }

    /// Executes a batch and writes its result file, timing both. A failed
    /// batch is recorded as such and leaves no result file.
    pub fn process_batch(&self, batch: &MicroBatch) -> BatchOutcome {
        let started = Instant::now();
        let written = self.execute_batch(batch).and_then(|payload| {
            let bytes = payload.to_bytes();
            self.tap.record(TapPoint::ResultWrite, &bytes);
            write_result(
                &self.job.source.result_dir,
                &batch.client_id,
                batch.window_id,
                &payload,
            )
        });
        let processing_time_ms = started.elapsed().as_secs_f64() * 1e3;
        let (result_file, error) = match written {
            Ok(p) => (Some(p), None),
            Err(e) => {
                log::warn!("batch {}#{} failed: {e}", batch.client_id, batch.window_id);
                (None, Some(e))
            }
        };
        let stats = BatchStats {
            client_id: batch.client_id.to_string(),
            window_id: batch.window_id,
            record_count: batch.record_count() as u64,
            processing_time_ms,
            mode: self.job.mode,
            algorithm: self.job.algorithm.kind,
            failed: error.is_some(),
        };
        BatchOutcome {
            stats,
            result_file,
            error,
        }
    }

    /// One-shot run over a static record file: read, compute in the job's
    /// mode, write the result, timed end to end. Sealed mode needs the data
    /// owner, which seals the input and opens the reply.
    pub fn run_batch_job(
        &self,
        input: &Path,
        owner: Option<&DataOwner>,
    ) -> Result<(HrvResult, f64), EngineError> {
        let started = Instant::now();
        let name = input
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        let client = self
            .job
            .source
            .client_pattern
            .parse(name)
            .map(|(c, _)| c)
            .unwrap_or_else(|| ClientId::new("batch").expect("valid id"));
        let bytes = std::fs::read(input).map_err(|source| EngineError::Io {
            path: input.into(),
            source,
        })?;
        let series = RrSeries::new(client.clone(), parse_records(&bytes, &self.guard)?)?;

        let body = match self.job.mode {
            ExecutionMode::Baseline | ExecutionMode::SplitPlain => {
                match self.execute_batch(&MicroBatch::plain(series, 0, 0))? {
                    ResultPayload::Plain(body) => body,
                    ResultPayload::Sealed(_) => unreachable!("clear modes return clear bodies"),
                }
            }
            ExecutionMode::SplitEncrypted => {
                let owner = owner.ok_or(EngineError::MissingOwner)?;
                let header = BatchHeader {
                    client_id: client.clone(),
                    window_id: 0,
                    window_start_ms: 0,
                };
                let task = owner
                    .seal(
                        &encode_plain_batch(&header, &series)?,
                        &ChannelAad::new(client.clone(), 0, Direction::Task),
                    )
                    .map_err(|_| EngineError::MissingOwner)?;
                let reply = self.worker()?.run_task(&task)?;
                let (_, ok, body) = owner
                    .open_reply(&reply)
                    .map_err(|_| EngineError::AuthenticationFailure)?;
                let body =
                    String::from_utf8(body).map_err(|_| EngineError::AuthenticationFailure)?;
                if !ok {
                    let kind = body
                        .trim()
                        .strip_prefix("error=")
                        .unwrap_or(&body)
                        .to_string();
                    return Err(EngineError::failed(kind));
                }
                body
            }
        };
        write_result(
            &self.job.source.result_dir,
            &client,
            0,
            &ResultPayload::Plain(body.clone()),
        )?;
        let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
        Ok((parse_result_body(&body)?, elapsed_ms))
    }
}

fn check_reply_address(
    reply: &CipherEnvelope,
    client: &ClientId,
    window_id: u64,
) -> Result<(), EngineError> {
    match reply.claimed_aad() {
        Some(a) if &a.client_id == client && a.window_id == window_id => Ok(()),
        _ => Err(EngineError::AuthenticationFailure),
    }
}
