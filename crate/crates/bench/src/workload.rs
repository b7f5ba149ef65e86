//! The input-load lattice and its generator.
//!
//! A workload replays a synthetic tachogram at `s_rate` records per second.
//! Timestamps are beat times, so the signal keeps its shape however fast it
//! is replayed.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cardio_core::naming::ingest_file_name;
use cardio_core::{encode_records, ClientId, RrMillis, RrSample, RECORD_LEN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::BenchError;

/// Sample rates of the small loads, in records per second.
pub const BASE_RATES: [u64; 6] = [44, 89, 178, 356, 712, 1424];
/// Input loads matching [`BASE_RATES`], in kB (small) or MB (big).
pub const BASE_SIZES: [u64; 6] = [1, 2, 4, 8, 16, 32];
/// Rates and sizes of the big loads are the small ones times this.
pub const BIG_FACTOR: u64 = 1024;

pub const DEFAULT_SEED: u64 = 0x5eed;
const START_MS: u64 = 1_546_300_800_000;
const MEAN_RR_MS: f64 = 800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WorkloadKind {
    BatchExecution,
    StreamingExecution,
}

impl WorkloadKind {
    pub fn short_name(self) -> &'static str {
        match self {
            WorkloadKind::BatchExecution => "be",
            WorkloadKind::StreamingExecution => "se",
        }
    }
}

impl FromStr for WorkloadKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "be" | "batch" => Ok(WorkloadKind::BatchExecution),
            "se" | "streaming" => Ok(WorkloadKind::StreamingExecution),
            other => Err(BenchError::InvalidWorkload(format!(
                "unknown kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scale {
    Small,
    Big,
}

impl Scale {
    pub fn short_name(self) -> &'static str {
        match self {
            Scale::Small => "small",
            Scale::Big => "big",
        }
    }

    pub fn rate_factor(self) -> u64 {
        match self {
            Scale::Small => 1,
            Scale::Big => BIG_FACTOR,
        }
    }

    /// Bytes in one unit of the size column: kB for small, MB for big.
    pub fn size_unit(self) -> u64 {
        1024 * self.rate_factor()
    }
}

impl FromStr for Scale {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "small" => Ok(Scale::Small),
            "big" => Ok(Scale::Big),
            other => Err(BenchError::InvalidWorkload(format!(
                "unknown scale {other:?}"
            ))),
        }
    }
}

/// One cell of the load lattice. `target_size` is bytes for a batch
/// workload and bytes per second for a streaming one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    pub scale: Scale,
    pub s_rate: u64,
    pub target_size: u64,
}

impl WorkloadSpec {
    /// `rate` is a small-load rate from [`BASE_RATES`]; for big loads the
    /// scaled rate is accepted too.
    pub fn new(kind: WorkloadKind, scale: Scale, rate: u64) -> Result<Self, BenchError> {
        let base = if scale == Scale::Big && rate >= BIG_FACTOR && rate.is_multiple_of(BIG_FACTOR) {
            rate / BIG_FACTOR
        } else {
            rate
        };
        let row = BASE_RATES.iter().position(|&r| r == base).ok_or_else(|| {
            BenchError::InvalidWorkload(format!("rate {rate} is not in {BASE_RATES:?}"))
        })?;
        Ok(Self::row(kind, scale, row))
    }

    fn row(kind: WorkloadKind, scale: Scale, row: usize) -> Self {
        WorkloadSpec {
            kind,
            scale,
            s_rate: BASE_RATES[row] * scale.rate_factor(),
            target_size: BASE_SIZES[row] * scale.size_unit(),
        }
    }

    /// All 24 cells, ordered by kind, scale, then rate.
    pub fn lattice() -> Vec<WorkloadSpec> {
        let mut out = Vec::with_capacity(24);
        for kind in [
            WorkloadKind::BatchExecution,
            WorkloadKind::StreamingExecution,
        ] {
            for scale in [Scale::Small, Scale::Big] {
                out.extend((0..BASE_RATES.len()).map(|r| Self::row(kind, scale, r)));
            }
        }
        out
    }

    pub fn base_rate(&self) -> u64 {
        self.s_rate / self.scale.rate_factor()
    }

    /// `be-small-44`, `se-big-1424`. Also the client id of its records.
    pub fn label(&self) -> String {
        format!(
            "{}-{}-{}",
            self.kind.short_name(),
            self.scale.short_name(),
            self.base_rate()
        )
    }

    pub fn client_id(&self) -> ClientId {
        ClientId::new(self.label()).expect("labels are valid client ids")
    }

    /// Serialized bytes per second of replay.
    pub fn bytes_per_second(&self) -> u64 {
        self.s_rate * RECORD_LEN as u64
    }

    /// Position in [`WorkloadSpec::lattice`], used to order reports.
    pub fn ordinal(&self) -> usize {
        let row = BASE_RATES
            .iter()
            .position(|&r| r == self.base_rate())
            .unwrap_or(0);
        (self.kind as usize * 2 + self.scale as usize) * BASE_RATES.len() + row
    }
}

impl fmt::Display for WorkloadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for WorkloadSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.trim().splitn(3, '-');
        let (Some(kind), Some(scale), Some(rate)) = (parts.next(), parts.next(), parts.next())
        else {
            return Err(BenchError::InvalidWorkload(format!("bad label {s:?}")));
        };
        let rate = rate
            .parse()
            .map_err(|_| BenchError::InvalidWorkload(format!("bad rate in {s:?}")))?;
        WorkloadSpec::new(kind.parse()?, scale.parse()?, rate)
    }
}

/// Endless synthetic tachogram: RR around 800 ms with a slow and a
/// respiratory-rate modulation plus uniform jitter. Deterministic per seed.
pub struct Tachogram {
    rng: ChaCha8Rng,
    elapsed_ms: f64,
}

impl Tachogram {
    pub fn new(seed: u64) -> Self {
        Tachogram {
            rng: ChaCha8Rng::seed_from_u64(seed),
            elapsed_ms: 0.0,
        }
    }

    pub fn take(&mut self, n: usize) -> Vec<RrSample> {
        let tau = std::f64::consts::TAU;
        (0..n)
            .map(|_| {
                let t_s = self.elapsed_ms / 1000.0;
                let rr = MEAN_RR_MS
                    + 30.0 * (tau * 0.1 * t_s).sin()
                    + 20.0 * (tau * 0.25 * t_s).sin()
                    + self.rng.gen_range(-15.0..15.0);
                let rr = RrMillis::from_millis_f64(rr);
                self.elapsed_ms += rr.as_f64();
                RrSample::new(START_MS + self.elapsed_ms as u64, rr)
            })
            .collect()
    }
}

/// Writes a workload into `out_dir`. A batch workload is one file of
/// `s_rate` records, `<label>_0.csv`. A streaming workload is one file per
/// second of replay, `<label>_<k>.csv` for `k < seconds`, each with
/// `s_rate` records continuing the same tachogram.
pub fn gen_workload(
    spec: &WorkloadSpec,
    out_dir: &Path,
    seed: u64,
    seconds: u64,
) -> Result<Vec<PathBuf>, BenchError> {
    let sink = |source| BenchError::SinkUnavailable {
        path: out_dir.into(),
        source,
    };
    std::fs::create_dir_all(out_dir).map_err(sink)?;
    let files = match spec.kind {
        WorkloadKind::BatchExecution => 1,
        WorkloadKind::StreamingExecution => seconds.max(1),
    };
    let client = spec.client_id();
    let mut signal = Tachogram::new(seed);
    let mut out = Vec::with_capacity(files as usize);
    for k in 0..files {
        let bytes = encode_records(&signal.take(spec.s_rate as usize))?;
        let path = out_dir.join(ingest_file_name(&client, k));
        std::fs::write(&path, bytes).map_err(sink)?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for spec in WorkloadSpec::lattice() {
            assert_eq!(spec.label().parse::<WorkloadSpec>().unwrap(), spec);
        }
        assert_eq!(WorkloadSpec::lattice().len(), 24);
        assert!("be-small-45".parse::<WorkloadSpec>().is_err());
        let big = WorkloadSpec::new(WorkloadKind::BatchExecution, Scale::Big, 1424 * 1024).unwrap();
        assert_eq!(big.label(), "be-big-1424");
    }

    #[test]
    fn ordinals_follow_the_lattice() {
        for (i, spec) in WorkloadSpec::lattice().iter().enumerate() {
            assert_eq!(spec.ordinal(), i);
        }
    }

    #[test]
    fn small_batch_of_44() {
        let dir = tempfile::tempdir().unwrap();
        let spec: WorkloadSpec = "be-small-44".parse().unwrap();
        let files = gen_workload(&spec, dir.path(), 1, 60).unwrap();
        assert_eq!(files.len(), 1);
        assert_eq!(std::fs::metadata(&files[0]).unwrap().len(), 1012);
        assert!(files[0].ends_with("be-small-44_0.csv"));
    }

    #[test]
    fn same_seed_same_bytes() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let spec: WorkloadSpec = "se-small-178".parse().unwrap();
        let fa = gen_workload(&spec, a.path(), 9, 3).unwrap();
        let fb = gen_workload(&spec, b.path(), 9, 3).unwrap();
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
    }

    #[test]
    fn streaming_seconds_continue_one_signal() {
        let mut whole = Tachogram::new(3);
        let all = whole.take(30);
        let mut parts = Tachogram::new(3);
        let mut joined = parts.take(10);
        joined.extend(parts.take(20));
        assert_eq!(all, joined);
        assert!(all.windows(2).all(|w| w[0].t_ms < w[1].t_ms));
    }
}
