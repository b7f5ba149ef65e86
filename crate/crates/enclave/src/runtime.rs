//! The trusted runtime and its call gate.
//!
//! Lifecycle: `create → attest → establish_session → ecall*`. Calls made
//! out of order fail without changing state. Once sessioned, every ecall
//! returns a sealed envelope: failures are sealed as error replies so the
//! host sees only that a batch failed (via the reply direction), never why.

use std::collections::HashSet;

use cardio_core::{
    decode_plain_batch, merge_runs, parse_records, run_algorithm, AnalysisAlgorithm, BatchHeader,
    ClientId, HrvError, RrGuard, RrSeries,
};
use rand::rngs::OsRng;
use x25519_dalek::{EphemeralSecret, PublicKey};

use crate::attestation::{derive_session, AttestationReport, AttestationRoot, Challenge, KeyShare};
use crate::envelope::{
    open, ChannelAad, CipherEnvelope, Direction, KeyId, Sealer, SessionKey, RUNTIME_SENDER,
};
use crate::error::EnclaveError;
use crate::measurement::{measure_code, EnclaveMeasurement, ENGINE_BUILD_TAG};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuntimeState {
    Created,
    Attested,
    Sessioned,
}

/// Public half of an established session, as seen by the host.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionInfo {
    pub key_id: KeyId,
}

pub struct TrustedRuntime {
    algorithm: AnalysisAlgorithm,
    measurement: EnclaveMeasurement,
    state: RuntimeState,
    root: AttestationRoot,
    ephemeral: Option<EphemeralSecret>,
    report: Option<AttestationReport>,
    session: Option<SessionKey>,
    sealer: Option<Sealer>,
    guard: RrGuard,
    seen_deposits: HashSet<(ClientId, u64)>,
    dropped_deposits: u64,
}

pub fn create_enclave(algorithm: AnalysisAlgorithm) -> TrustedRuntime {
    TrustedRuntime::create(algorithm)
}

impl TrustedRuntime {
    pub fn create(algorithm: AnalysisAlgorithm) -> Self {
        Self::create_with(algorithm, ENGINE_BUILD_TAG, AttestationRoot::fixture())
    }

    pub fn create_with(
        algorithm: AnalysisAlgorithm,
        build_tag: &[u8],
        root: AttestationRoot,
    ) -> Self {
        TrustedRuntime {
            algorithm,
            measurement: measure_code(algorithm, build_tag),
            state: RuntimeState::Created,
            root,
            ephemeral: None,
            report: None,
            session: None,
            sealer: None,
            guard: RrGuard::default(),
            seen_deposits: HashSet::new(),
            dropped_deposits: 0,
        }
    }

    pub fn algorithm(&self) -> AnalysisAlgorithm {
        self.algorithm
    }

    pub fn measurement(&self) -> EnclaveMeasurement {
        self.measurement
    }

    pub fn state(&self) -> RuntimeState {
        self.state
    }

    pub fn session_info(&self) -> Option<SessionInfo> {
        self.session
            .as_ref()
            .map(|k| SessionInfo { key_id: k.key_id })
    }

    /// Deposits that authenticated but held malformed records and were
    /// left out of their batch.
    pub fn dropped_deposits(&self) -> u64 {
        self.dropped_deposits
    }

    pub fn attest(
        &mut self,
        expected: &EnclaveMeasurement,
        challenge: Challenge,
    ) -> Result<AttestationReport, EnclaveError> {
        if self.state != RuntimeState::Created {
            return Err(EnclaveError::InvalidState {
                call: "attest",
                state: self.state,
            });
        }
        if *expected != self.measurement {
            return Err(EnclaveError::MeasurementMismatch);
        }
        let secret = EphemeralSecret::random_from_rng(OsRng);
        let key_share = PublicKey::from(&secret).to_bytes();
        let report = AttestationReport {
            measurement: self.measurement,
            challenge_nonce: challenge,
            key_share,
            binding_tag: self
                .root
                .sign_report(&self.measurement, &challenge, &key_share),
        };
        self.ephemeral = Some(secret);
        self.report = Some(report.clone());
        self.state = RuntimeState::Attested;
        Ok(report)
    }

    /// Completes key agreement for the report this runtime issued.
    pub fn establish_session(
        &mut self,
        report: &AttestationReport,
        verifier_share: &KeyShare,
    ) -> Result<SessionInfo, EnclaveError> {
        if self.state != RuntimeState::Attested {
            return Err(EnclaveError::InvalidState {
                call: "establish_session",
                state: self.state,
            });
        }
        report.verify_binding(&self.root.public())?;
        if self.report.as_ref() != Some(report) {
            return Err(EnclaveError::InvalidReport);
        }
        let secret = self
            .ephemeral
            .take()
            .expect("attested runtime holds its ephemeral secret");
        let shared = secret.diffie_hellman(&PublicKey::from(*verifier_share));
        let key = derive_session(
            shared.as_bytes(),
            &report.measurement,
            &report.challenge_nonce,
            &report.key_share,
            verifier_share,
        );
        let info = SessionInfo { key_id: key.key_id };
        self.sealer = Some(key.sealer(RUNTIME_SENDER));
        self.session = Some(key);
        self.state = RuntimeState::Sessioned;
        Ok(info)
    }

    fn gate(&self, call: &'static str) -> Result<(), EnclaveError> {
        if self.state == RuntimeState::Sessioned {
            Ok(())
        } else {
            Err(EnclaveError::CallGateRefused {
                call,
                state: self.state,
            })
        }
    }

    /// Processes a sealed batch (`Direction::Task`, plaintext in the batch
    /// encoding) and returns the sealed reply.
    pub fn ecall(&mut self, task: &CipherEnvelope) -> Result<CipherEnvelope, EnclaveError> {
        self.gate("ecall")?;
        let claimed = task.claimed_aad();
        let (client, window) = reply_address(claimed.as_ref());
        let outcome = self.run_task(task, claimed);
        self.seal_reply(client, window, outcome)
    }

    fn run_task(
        &self,
        task: &CipherEnvelope,
        claimed: Option<ChannelAad>,
    ) -> Result<String, String> {
        let aad = claimed
            .filter(|a| a.direction == Direction::Task)
            .ok_or("AuthenticationFailure")?;
        let key = self.session.as_ref().expect("sessioned");
        let plaintext = open(task, key, &task.aad).map_err(|e| error_kind(&e))?;
        let (header, series) =
            decode_plain_batch(&plaintext, &self.guard).map_err(|e| e.kind().to_string())?;
        if header.client_id != aad.client_id || header.window_id != aad.window_id {
            return Err("AuthenticationFailure".into());
        }
        compute_body(self.algorithm, &series).map_err(|e| e.kind().to_string())
    }

    /// Processes a window assembled from sealed client deposits. Every
    /// deposit must authenticate under the session key and name the
    /// header's client, otherwise the whole batch fails.
    pub fn ecall_deposits(
        &mut self,
        header: &BatchHeader,
        deposits: &[CipherEnvelope],
    ) -> Result<CipherEnvelope, EnclaveError> {
        self.gate("ecall")?;
        let outcome = self.run_deposits(header, deposits);
        self.seal_reply(header.client_id.clone(), header.window_id, outcome)
    }

    fn run_deposits(
        &mut self,
        header: &BatchHeader,
        deposits: &[CipherEnvelope],
    ) -> Result<String, String> {
        let key = self.session.as_ref().expect("sessioned");
        let mut opened = Vec::with_capacity(deposits.len());
        for env in deposits {
            let aad = env
                .claimed_aad()
                .filter(|a| a.direction == Direction::Deposit && a.client_id == header.client_id)
                .ok_or("AuthenticationFailure")?;
            let plaintext = open(env, key, &env.aad).map_err(|e| error_kind(&e))?;
            if self
                .seen_deposits
                .contains(&(aad.client_id.clone(), aad.window_id))
            {
                return Err("Replay".into());
            }
            opened.push((aad.window_id, plaintext));
        }

        let mut runs = Vec::with_capacity(opened.len());
        let mut seqs = Vec::with_capacity(opened.len());
        for (seq, plaintext) in &opened {
            self.seen_deposits.insert((header.client_id.clone(), *seq));
            match parse_records(plaintext, &self.guard) {
                Ok(s) => {
                    runs.push(s);
                    seqs.push(*seq);
                }
                Err(e) => {
                    log::warn!("dropping malformed deposit {}#{seq}: {e}", header.client_id);
                    self.dropped_deposits += 1;
                }
            }
        }
        let parsed = runs.len();
        let (series, rejected) = merge_runs(header.client_id.clone(), runs);
        for i in &rejected {
            log::warn!(
                "dropping deposit {}#{} with conflicting timestamps",
                header.client_id,
                seqs[*i]
            );
        }
        self.dropped_deposits += rejected.len() as u64;
        if !opened.is_empty() && rejected.len() == parsed {
            return Err("MalformedRecord".into());
        }
        compute_body(self.algorithm, &series).map_err(|e| e.kind().to_string())
    }

    fn seal_reply(
        &mut self,
        client: ClientId,
        window: u64,
        outcome: Result<String, String>,
    ) -> Result<CipherEnvelope, EnclaveError> {
        let (direction, body) = match outcome {
            Ok(body) => (Direction::Reply, body),
            Err(kind) => (Direction::ErrorReply, error_body(&kind)),
        };
        let sealer = self.sealer.as_mut().expect("sessioned");
        sealer.seal_for(body.as_bytes(), &ChannelAad::new(client, window, direction))
    }

    #[cfg(test)]
    pub(crate) fn session_key(&self) -> Option<&SessionKey> {
        self.session.as_ref()
    }
}

fn reply_address(claimed: Option<&ChannelAad>) -> (ClientId, u64) {
    match claimed {
        Some(a) => (a.client_id.clone(), a.window_id),
        None => (ClientId::new("unknown").expect("valid id"), 0),
    }
}

fn error_kind(e: &EnclaveError) -> String {
    match e {
        EnclaveError::UnknownKeyId => "UnknownKeyId".into(),
        _ => "AuthenticationFailure".into(),
    }
}

/// Body of a failed batch.
pub fn error_body(kind: &str) -> String {
    format!("error={kind}\n")
}

/// Runs the algorithm and renders the result body. This is the computation
/// every execution mode performs, in or out of the trusted runtime.
pub fn compute_body(algorithm: AnalysisAlgorithm, series: &RrSeries) -> Result<String, HrvError> {
    run_algorithm::<f64>(algorithm.kind, series).map(|r| r.render())
}

/// Whether a reply envelope reports a failed batch. Reads the
/// authenticated-but-visible direction only.
pub fn reply_failed(reply: &CipherEnvelope) -> bool {
    !matches!(
        reply.claimed_aad(),
        Some(ChannelAad {
            direction: Direction::Reply,
            ..
        })
    )
}
