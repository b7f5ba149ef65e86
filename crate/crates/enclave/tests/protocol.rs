use cardio_core::{
    encode_plain_batch, AlgorithmKind, BatchHeader, ClientId, RrMillis, RrSample, RrSeries,
};
use cardio_enclave::{
    open_for, AttestationReport, AttestationRoot, ChannelAad, CipherEnvelope, Direction,
    EnclaveError, RuntimeState, SessionKey, TrustedRuntime, Verifier,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Call {
    Create,
    Attest,
    Establish,
    Ecall,
}

const CALLS: [Call; 4] = [Call::Create, Call::Attest, Call::Establish, Call::Ecall];

struct Harness {
    runtime: Option<TrustedRuntime>,
    verifier: Verifier,
    report: Option<AttestationReport>,
    key: Option<SessionKey>,
}

fn client() -> ClientId {
    ClientId::new("c1").unwrap()
}

fn task(key: &SessionKey) -> CipherEnvelope {
    let samples = vec![
        RrSample::new(1_000, RrMillis::from_thousandths(800_000)),
        RrSample::new(1_810, RrMillis::from_thousandths(810_000)),
    ];
    let series = RrSeries::new(client(), samples).unwrap();
    let header = BatchHeader {
        client_id: client(),
        window_id: 0,
        window_start_ms: 0,
    };
    key.sealer(0)
        .seal_for(
            &encode_plain_batch(&header, &series).unwrap(),
            &ChannelAad::new(client(), 0, Direction::Task),
        )
        .unwrap()
}

/// A report and key from an unrelated runtime, used when the harness has
/// nothing of its own to offer.
fn foreign() -> (AttestationReport, SessionKey, [u8; 32]) {
    let mut rt = TrustedRuntime::create(AlgorithmKind::Sdnn.into());
    let mut v = Verifier::new(rt.measurement(), AttestationRoot::fixture().public());
    let report = rt.attest(&rt.measurement(), v.challenge()).unwrap();
    let (key, share) = v.establish_session(&report).unwrap();
    (report, key, share)
}

impl Harness {
    fn new() -> Self {
        let expected = TrustedRuntime::create(AlgorithmKind::Sdnn.into()).measurement();
        Harness {
            runtime: None,
            verifier: Verifier::new(expected, AttestationRoot::fixture().public()),
            report: None,
            key: None,
        }
    }

    fn state(&self) -> Option<RuntimeState> {
        self.runtime.as_ref().map(|r| r.state())
    }

    fn call(&mut self, call: Call) -> bool {
        match call {
            Call::Create => {
                if self.runtime.is_some() {
                    return false;
                }
                self.runtime = Some(TrustedRuntime::create(AlgorithmKind::Sdnn.into()));
                true
            }
            Call::Attest => {
                let Some(rt) = self.runtime.as_mut() else {
                    return false;
                };
                let challenge = self.verifier.challenge();
                match rt.attest(&rt.measurement(), challenge) {
                    Ok(r) => {
                        self.report = Some(r);
                        true
                    }
                    Err(e) => {
                        assert!(matches!(e, EnclaveError::InvalidState { .. }), "{e:?}");
                        false
                    }
                }
            }
            Call::Establish => {
                let Some(rt) = self.runtime.as_mut() else {
                    return false;
                };
                let (report, share) = match self.report.clone() {
                    Some(r) => match self.verifier.establish_session(&r) {
                        Ok((key, share)) => {
                            self.key = Some(key);
                            (r, share)
                        }
                        Err(_) => (r, [7; 32]),
                    },
                    None => {
                        let (r, _, share) = foreign();
                        (r, share)
                    }
                };
                match rt.establish_session(&report, &share) {
                    Ok(_) => true,
                    Err(e) => {
                        assert!(
                            matches!(
                                e,
                                EnclaveError::InvalidState { .. } | EnclaveError::InvalidReport
                            ),
                            "{e:?}"
                        );
                        false
                    }
                }
            }
            Call::Ecall => {
                let Some(rt) = self.runtime.as_mut() else {
                    return false;
                };
                let key = self.key.clone().unwrap_or_else(|| foreign().1);
                match rt.ecall(&task(&key)) {
                    Ok(reply) => {
                        let aad = reply.claimed_aad().unwrap();
                        assert_eq!(aad.direction, Direction::Reply);
                        assert_eq!(open_for(&reply, &key, &aad).unwrap(), b"sdnn_ms=5.000\n");
                        true
                    }
                    Err(e) => {
                        assert!(matches!(e, EnclaveError::CallGateRefused { .. }), "{e:?}");
                        false
                    }
                }
            }
        }
    }
}

/// Reference model: the state after a call, or `None` if the call is refused.
fn model_step(state: Option<RuntimeState>, call: Call) -> Option<Option<RuntimeState>> {
    use RuntimeState::*;
    match (state, call) {
        (None, Call::Create) => Some(Some(Created)),
        (Some(Created), Call::Attest) => Some(Some(Attested)),
        (Some(Attested), Call::Establish) => Some(Some(Sessioned)),
        (Some(Sessioned), Call::Ecall) => Some(Some(Sessioned)),
        _ => None,
    }
}

fn sequences(max_len: usize) -> Vec<Vec<Call>> {
    let mut out = vec![];
    let mut frontier: Vec<Vec<Call>> = vec![vec![]];
    for _ in 0..max_len {
        frontier = frontier
            .iter()
            .flat_map(|s| CALLS.iter().map(move |c| [s.clone(), vec![*c]].concat()))
            .collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

#[test]
fn only_the_documented_call_order_is_accepted() {
    let all = sequences(5);
    assert_eq!(all.len(), 4 + 16 + 64 + 256 + 1024);
    let mut accepted = 0;
    for seq in &all {
        let mut h = Harness::new();
        let mut model = None;
        let mut all_ok = true;
        for (i, &call) in seq.iter().enumerate() {
            let before = h.state();
            assert_eq!(before, model);
            let ok = h.call(call);
            match model_step(model, call) {
                Some(next) => {
                    assert!(ok, "sequence {seq:?} step {i} should be accepted");
                    model = next;
                }
                None => {
                    assert!(!ok, "sequence {seq:?} step {i} should be refused");
                    assert_eq!(h.state(), before, "refused call changed state in {seq:?}");
                }
            }
            all_ok &= ok;
        }
        if all_ok {
            accepted += 1;
        }
    }
    // Fully accepted sequences are exactly the prefixes of
    // create, attest, establish, ecall, ecall.
    assert_eq!(accepted, 5);
}

#[test]
fn replayed_reports_are_stale_under_any_delivery_order() {
    let root = AttestationRoot::fixture();
    let expected = TrustedRuntime::create(AlgorithmKind::Identity.into()).measurement();

    // Every ordering of delivering each of three reports twice.
    let mut orders = std::collections::BTreeSet::new();
    permute(&mut vec![0usize, 0, 1, 1, 2, 2], 0, &mut orders);
    assert_eq!(orders.len(), 90);

    for order in orders {
        let mut v = Verifier::new(expected, root.public());
        let reports: Vec<AttestationReport> = (0..3)
            .map(|_| {
                let mut rt = TrustedRuntime::create(AlgorithmKind::Identity.into());
                rt.attest(&expected, v.challenge()).unwrap()
            })
            .collect();
        let mut seen = [false; 3];
        for idx in order {
            let res = v.verify_report(&reports[idx]);
            if seen[idx] {
                assert_eq!(res, Err(EnclaveError::StaleNonce));
            } else {
                assert_eq!(res, Ok(()));
                seen[idx] = true;
            }
        }
    }

    // A report answering a challenge this verifier never issued.
    let mut other = Verifier::new(expected, root.public());
    let mut rt = TrustedRuntime::create(AlgorithmKind::Identity.into());
    let report = rt.attest(&expected, [3; 16]).unwrap();
    assert_eq!(other.verify_report(&report), Err(EnclaveError::StaleNonce));
}

fn permute(items: &mut Vec<usize>, k: usize, out: &mut std::collections::BTreeSet<Vec<usize>>) {
    if k == items.len() {
        out.insert(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, out);
        items.swap(k, i);
    }
}

#[test]
fn every_single_bit_flip_of_a_256_byte_envelope_fails() {
    let mut rt = TrustedRuntime::create(AlgorithmKind::Identity.into());
    let mut v = Verifier::new(rt.measurement(), AttestationRoot::fixture().public());
    let report = rt.attest(&rt.measurement(), v.challenge()).unwrap();
    let (key, share) = v.establish_session(&report).unwrap();
    rt.establish_session(&report, &share).unwrap();

    // 15-byte id -> 24-byte aad; 8 records -> 184-byte ciphertext; 48 fixed.
    let client = ClientId::new("client-00000001").unwrap();
    let samples: Vec<RrSample> = (0..8)
        .map(|i| {
            RrSample::new(
                1_546_300_800_000 + 800 * i,
                RrMillis::from_thousandths(800_000),
            )
        })
        .collect();
    let body = cardio_core::encode_records(&samples).unwrap();
    let aad = ChannelAad::new(client.clone(), 0, Direction::Deposit);
    let wire = key.sealer(1).seal_for(&body, &aad).unwrap().to_bytes();
    assert_eq!(wire.len(), 256);

    let header = BatchHeader {
        client_id: client,
        window_id: 0,
        window_start_ms: 0,
    };
    let mut failures = 0;
    for bit in 0..wire.len() * 8 {
        let mut corrupt = wire.clone();
        corrupt[bit / 8] ^= 1 << (bit % 8);
        match CipherEnvelope::from_bytes(&corrupt) {
            Err(_) => failures += 1,
            Ok(env) => {
                assert!(open_for(&env, &key, &aad).is_err(), "bit {bit} opened");
                let reply = rt.ecall_deposits(&header, &[env]).unwrap();
                assert!(
                    cardio_enclave::reply_failed(&reply),
                    "bit {bit} produced a result"
                );
                failures += 1;
            }
        }
    }
    assert_eq!(failures, 2048);
}
