//! The trusted side of the split modes, running on its own thread and
//! reached only through a message channel. Data-plane messages are byte
//! buffers, as they would be in shared memory, and pass through the tap.

use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use cardio_core::wire::{WireReader, WireWriter};
use cardio_core::{decode_plain_batch, AnalysisAlgorithm, BatchHeader, RrGuard};
use cardio_enclave::{
    compute_body, AttestationReport, Challenge, CipherEnvelope, EnclaveError, EnclaveMeasurement,
    KeyShare, SessionInfo, TrustedRuntime,
};
use crossbeam_channel::{bounded, unbounded, Sender};

use crate::error::EngineError;
use crate::tap::{ByteTap, TapPoint};

enum Request {
    /// Plain batch encoding; reply is `status ‖ body`.
    Plain(Vec<u8>),
    /// One sealed task envelope; reply is the sealed reply envelope.
    Task(Vec<u8>),
    /// `header ‖ count(u32) ‖ envelopes`; reply is the sealed reply envelope.
    Deposits(Vec<u8>),
    Attest(EnclaveMeasurement, Challenge),
    Establish(Box<AttestationReport>, KeyShare),
}

enum Response {
    Bytes(Result<Vec<u8>, EnclaveError>),
    Report(Result<AttestationReport, EnclaveError>),
    Session(Result<SessionInfo, EnclaveError>),
}

const STATUS_OK: u8 = 0;
const STATUS_FAILED: u8 = 1;

enum Backend {
    Plain(AnalysisAlgorithm),
    Trusted(Box<TrustedRuntime>),
}

type Job = (Request, Sender<Response>);

pub struct TrustedWorker {
    tx: Mutex<Option<Sender<Job>>>,
    handle: Mutex<Option<JoinHandle<()>>>,
    tap: Arc<ByteTap>,
}

impl TrustedWorker {
    /// Worker that computes on clear batches.
    pub fn plain(algorithm: AnalysisAlgorithm, tap: Arc<ByteTap>) -> Self {
        Self::spawn(Backend::Plain(algorithm), tap)
    }

    /// Worker hosting a trusted runtime that still has to be attested.
    pub fn trusted(runtime: TrustedRuntime, tap: Arc<ByteTap>) -> Self {
        Self::spawn(Backend::Trusted(Box::new(runtime)), tap)
    }

    fn spawn(mut backend: Backend, tap: Arc<ByteTap>) -> Self {
        let (tx, rx) = unbounded::<(Request, Sender<Response>)>();
        let handle = std::thread::Builder::new()
            .name("trusted-worker".into())
            .spawn(move || {
                let guard = RrGuard::default();
                for (req, reply) in rx {
                    let _ = reply.send(serve(&mut backend, req, &guard));
                }
            })
            .expect("spawn trusted worker");
        TrustedWorker {
            tx: Mutex::new(Some(tx)),
            handle: Mutex::new(Some(handle)),
            tap,
        }
    }

    fn call(&self, req: Request) -> Result<Response, EngineError> {
        let tx = self
            .tx
            .lock()
            .expect("worker lock")
            .clone()
            .ok_or(EngineError::ChannelClosed)?;
        let (reply_tx, reply_rx) = bounded(1);
        tx.send((req, reply_tx))
            .map_err(|_| EngineError::ChannelClosed)?;
        reply_rx.recv().map_err(|_| EngineError::ChannelClosed)
    }

    fn data_call(&self, req: Request) -> Result<Vec<u8>, EngineError> {
        match self.call(req)? {
            Response::Bytes(Ok(bytes)) => {
                self.tap.record(TapPoint::ChannelReply, &bytes);
                Ok(bytes)
            }
            Response::Bytes(Err(e)) => Err(EngineError::Refused(e)),
            _ => unreachable!("data request answered with control response"),
        }
    }

    /// Sends a clear batch; returns the result body or the failure kind.
    pub fn run_plain(&self, batch: Vec<u8>) -> Result<Result<String, String>, EngineError> {
        self.tap.record(TapPoint::ChannelRequest, &batch);
        let reply = self.data_call(Request::Plain(batch))?;
        let (status, body) = reply.split_first().ok_or(EngineError::ChannelClosed)?;
        let body =
            String::from_utf8(body.to_vec()).map_err(|_| EngineError::failed("non-utf8 reply"))?;
        Ok(if *status == STATUS_OK {
            Ok(body)
        } else {
            Err(body)
        })
    }

    pub fn run_task(&self, task: &CipherEnvelope) -> Result<CipherEnvelope, EngineError> {
        let bytes = task.to_bytes();
        self.tap.record(TapPoint::ChannelRequest, &bytes);
        let reply = self.data_call(Request::Task(bytes))?;
        CipherEnvelope::from_bytes(&reply).map_err(|_| EngineError::AuthenticationFailure)
    }

    pub fn run_deposits(
        &self,
        header: &BatchHeader,
        deposits: &[CipherEnvelope],
    ) -> Result<CipherEnvelope, EngineError> {
        let mut w = WireWriter::with_capacity(
            64 + deposits.iter().map(CipherEnvelope::wire_len).sum::<usize>(),
        );
        header.encode_into(&mut w);
        w.u32(u32::try_from(deposits.len()).map_err(|_| EngineError::failed("too many deposits"))?);
        for d in deposits {
            d.write(&mut w);
        }
        let bytes = w.finish();
        self.tap.record(TapPoint::ChannelRequest, &bytes);
        let reply = self.data_call(Request::Deposits(bytes))?;
        CipherEnvelope::from_bytes(&reply).map_err(|_| EngineError::AuthenticationFailure)
    }

    pub fn attest(
        &self,
        expected: EnclaveMeasurement,
        challenge: Challenge,
    ) -> Result<AttestationReport, EngineError> {
        match self.call(Request::Attest(expected, challenge))? {
            Response::Report(r) => r.map_err(EngineError::AttestationFailed),
            _ => unreachable!("attest answered with another response"),
        }
    }

    pub fn establish_session(
        &self,
        report: AttestationReport,
        share: KeyShare,
    ) -> Result<SessionInfo, EngineError> {
        match self.call(Request::Establish(Box::new(report), share))? {
            Response::Session(r) => r.map_err(EngineError::AttestationFailed),
            _ => unreachable!("establish answered with another response"),
        }
    }

    /// Closes the channel and waits for the worker to exit. Later calls fail
    /// with `ChannelClosed`.
    pub fn close(&self) {
        self.tx.lock().expect("worker lock").take();
        if let Some(h) = self.handle.lock().expect("worker lock").take() {
            let _ = h.join();
        }
    }
}

impl Drop for TrustedWorker {
    fn drop(&mut self) {
        self.close();
    }
}

fn serve(backend: &mut Backend, req: Request, guard: &RrGuard) -> Response {
    match (backend, req) {
        (Backend::Plain(alg), Request::Plain(bytes)) => {
            let outcome = decode_plain_batch(&bytes, guard)
                .and_then(|(_, series)| compute_body(*alg, &series));
            let mut out = Vec::new();
            match outcome {
                Ok(body) => {
                    out.push(STATUS_OK);
                    out.extend_from_slice(body.as_bytes());
                }
                Err(e) => {
                    out.push(STATUS_FAILED);
                    out.extend_from_slice(e.kind().as_bytes());
                }
            }
            Response::Bytes(Ok(out))
        }
        (Backend::Trusted(rt), Request::Task(bytes)) => Response::Bytes(
            CipherEnvelope::from_bytes(&bytes)
                .and_then(|task| rt.ecall(&task))
                .map(|r| r.to_bytes()),
        ),
        (Backend::Trusted(rt), Request::Deposits(bytes)) => Response::Bytes(
            decode_deposits(&bytes)
                .and_then(|(h, d)| rt.ecall_deposits(&h, &d))
                .map(|r| r.to_bytes()),
        ),
        (Backend::Trusted(rt), Request::Attest(expected, challenge)) => {
            Response::Report(rt.attest(&expected, challenge))
        }
        (Backend::Trusted(rt), Request::Establish(report, share)) => {
            Response::Session(rt.establish_session(&report, &share))
        }
        (_, Request::Attest(..)) => Response::Report(Err(EnclaveError::MeasurementMismatch)),
        (_, Request::Establish(..)) => Response::Session(Err(EnclaveError::InvalidReport)),
        (_, _) => Response::Bytes(Err(EnclaveError::MalformedEnvelope(
            "request not served by this worker".into(),
        ))),
    }
}

fn decode_deposits(bytes: &[u8]) -> Result<(BatchHeader, Vec<CipherEnvelope>), EnclaveError> {
    let bad = |m: String| EnclaveError::MalformedEnvelope(m);
    let mut r = WireReader::new(bytes);
    let header = BatchHeader::decode_from(&mut r).map_err(|e| bad(e.to_string()))?;
    let n = r.u32().map_err(|e| bad(e.to_string()))?;
    let deposits = (0..n)
        .map(|_| CipherEnvelope::read(&mut r))
        .collect::<Result<Vec<_>, _>>()?;
    r.finish().map_err(|e| bad(e.to_string()))?;
    Ok((header, deposits))
}
