#![allow(dead_code)]

use std::path::Path;

use cardio_core::{
    encode_records, AlgorithmKind, ClientId, ExecutionMode, RrMillis, RrSample, RrSeries,
};
use cardio_enclave::{ChannelAad, CipherEnvelope, DataOwner, Direction, Sealer};
use cardio_engine::{Engine, JobSpec, StreamSourceConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const T0: u64 = 1_546_300_800_000;

pub struct Dirs {
    pub _tmp: tempfile::TempDir,
    pub source: StreamSourceConfig,
}

pub fn dirs() -> Dirs {
    let tmp = tempfile::tempdir().unwrap();
    let source = StreamSourceConfig::new(tmp.path().join("in"), tmp.path().join("out"));
    std::fs::create_dir_all(&source.ingest_dir).unwrap();
    std::fs::create_dir_all(&source.result_dir).unwrap();
    Dirs { _tmp: tmp, source }
}

pub fn job(kind: AlgorithmKind, mode: ExecutionMode, source: &StreamSourceConfig) -> JobSpec {
    JobSpec {
        algorithm: kind.into(),
        mode,
        source: source.clone(),
    }
}

/// Engine plus, in sealed mode, the owner holding its session key.
pub fn engine(
    kind: AlgorithmKind,
    mode: ExecutionMode,
    source: &StreamSourceConfig,
) -> (Engine, Option<DataOwner>) {
    let j = job(kind, mode, source);
    if mode == ExecutionMode::SplitEncrypted {
        let mut owner = DataOwner::for_algorithm(kind.into());
        let e = Engine::start(j, Some(&mut owner)).unwrap();
        (e, Some(owner))
    } else {
        (Engine::start(j, None).unwrap(), None)
    }
}

pub fn client(name: &str) -> ClientId {
    ClientId::new(name).unwrap()
}

/// Physiologic-looking beats starting after `t0`.
pub fn beats(rng: &mut ChaCha8Rng, t0: u64, n: usize) -> Vec<RrSample> {
    let mut t = t0;
    (0..n)
        .map(|_| {
            let rr = rng.gen_range(600_000..1_100_000u32);
            t += u64::from(rr / 1000);
            RrSample::new(t, RrMillis::from_thousandths(rr))
        })
        .collect()
}

pub fn series(name: &str, samples: Vec<RrSample>) -> RrSeries {
    RrSeries::new(client(name), samples).unwrap()
}

pub fn seal_deposit(
    sealer: &mut Sealer,
    c: &ClientId,
    seq: u64,
    samples: &[RrSample],
) -> CipherEnvelope {
    sealer
        .seal_for(
            &encode_records(samples).unwrap(),
            &ChannelAad::new(c.clone(), seq, Direction::Deposit),
        )
        .unwrap()
}

/// Writes an ingest file the way a gateway does: `.part`, then rename.
pub fn deposit_bytes(dir: &Path, name: &str, bytes: &[u8]) {
    let part = dir.join(format!("{name}.part"));
    std::fs::write(&part, bytes).unwrap();
    std::fs::rename(part, dir.join(name)).unwrap();
}

pub fn deposit(
    dir: &Path,
    c: &ClientId,
    seq: u64,
    samples: &[RrSample],
    sealer: Option<&mut Sealer>,
) {
    let bytes = match sealer {
        Some(s) => seal_deposit(s, c, seq, samples).to_bytes(),
        None => encode_records(samples).unwrap(),
    };
    deposit_bytes(dir, &format!("{c}_{seq}.csv"), &bytes);
}

/// Result file body as the client reads it: opened with the owner's key in
/// sealed mode.
pub fn read_result(path: &Path, owner: Option<&DataOwner>) -> String {
    let bytes = std::fs::read(path).unwrap();
    match owner {
        Some(o) => {
            let env = CipherEnvelope::from_bytes(&bytes).unwrap();
            let (_, ok, body) = o.open_reply(&env).unwrap();
            assert!(ok);
            String::from_utf8(body).unwrap()
        }
        None => String::from_utf8(bytes).unwrap(),
    }
}

pub fn visible_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| !n.starts_with('.'))
        .collect();
    v.sort();
    v
}
