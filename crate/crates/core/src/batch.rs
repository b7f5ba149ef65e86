//! Binary encoding of a per-client window of samples, used on the channel
//! between the untrusted host and the trusted component.
//!
//! Layout (little-endian):
//! `client(u16 len ‖ bytes) ‖ window_id(u64) ‖ window_start_ms(u64) ‖ n_records(u64) ‖ records(23·n)`

use serde::{Deserialize, Serialize};

use crate::error::HrvError;
use crate::record::{parse_records, write_records, RECORD_LEN};
use std::collections::HashSet;

use crate::sample::{ClientId, RrGuard, RrSample, RrSeries};
use crate::wire::{WireReader, WireWriter};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BatchHeader {
    pub client_id: ClientId,
    pub window_id: u64,
    pub window_start_ms: u64,
}

impl BatchHeader {
    pub fn encode_into(&self, w: &mut WireWriter) {
        w.short_bytes(self.client_id.as_str().as_bytes())
            .u64(self.window_id)
            .u64(self.window_start_ms);
    }

    pub fn decode_from(r: &mut WireReader<'_>) -> Result<Self, HrvError> {
        let bad = |e: crate::wire::WireError| HrvError::MalformedBatch(e.to_string());
        let client = r.short_bytes().map_err(bad)?;
        let client = std::str::from_utf8(client)
            .map_err(|_| HrvError::MalformedBatch("client id not utf-8".into()))?;
        Ok(BatchHeader {
            client_id: ClientId::new(client)?,
            window_id: r.u64().map_err(bad)?,
            window_start_ms: r.u64().map_err(bad)?,
        })
    }
}

pub fn encode_plain_batch(header: &BatchHeader, series: &RrSeries) -> Result<Vec<u8>, HrvError> {
    let mut w = WireWriter::with_capacity(64 + series.len() * RECORD_LEN);
    header.encode_into(&mut w);
    w.u64(series.len() as u64);
    let mut records = Vec::new();
    write_records(series.samples(), &mut records)?;
    w.raw(&records);
    Ok(w.finish())
}

pub fn decode_plain_batch(
    bytes: &[u8],
    guard: &RrGuard,
) -> Result<(BatchHeader, RrSeries), HrvError> {
    let mut r = WireReader::new(bytes);
    let header = BatchHeader::decode_from(&mut r)?;
    let n = r
        .u64()
        .map_err(|e| HrvError::MalformedBatch(e.to_string()))?;
    let len = usize::try_from(n)
        .ok()
        .and_then(|n| n.checked_mul(RECORD_LEN))
        .ok_or_else(|| HrvError::MalformedBatch("record count overflow".into()))?;
    let records = r
        .take(len)
        .map_err(|e| HrvError::MalformedBatch(e.to_string()))?;
    r.finish()
        .map_err(|e| HrvError::MalformedBatch(e.to_string()))?;
    let samples = parse_records(records, guard)?;
    let series = RrSeries::new(header.client_id.clone(), samples)?;
    Ok((header, series))
}

/// Merges per-file sample runs of one client into a single series. A run
/// whose timestamps are not strictly increasing, or that repeats a timestamp
/// of an earlier accepted run, is rejected whole. Returns the series and the
/// indices of rejected runs.
pub fn merge_runs(client_id: ClientId, runs: Vec<Vec<RrSample>>) -> (RrSeries, Vec<usize>) {
    let mut seen: HashSet<u64> = HashSet::new();
    let mut merged = Vec::with_capacity(runs.iter().map(Vec::len).sum());
    let mut rejected = Vec::new();
    for (i, run) in runs.into_iter().enumerate() {
        let increasing = run.windows(2).all(|w| w[0].t_ms < w[1].t_ms);
        if !increasing || run.iter().any(|s| seen.contains(&s.t_ms)) {
            rejected.push(i);
            continue;
        }
        seen.extend(run.iter().map(|s| s.t_ms));
        merged.extend(run);
    }
    let series =
        RrSeries::from_unordered(client_id, merged).expect("timestamps are unique by construction");
    (series, rejected)
}
