//! Fixed-width text record grammar for RR samples.
//!
//! A record is exactly 23 bytes: 13 zero-padded epoch-millisecond digits,
//! a comma, the RR interval as `dddd.ddd`, and a newline.
//!
//! ```text
//! 1546300800000,0857.100\n
//! ```

use crate::error::HrvError;
use crate::sample::{RrGuard, RrMillis, RrSample};

pub const RECORD_LEN: usize = 23;

const TS_DIGITS: usize = 13;
const MAX_TIMESTAMP: u64 = 9_999_999_999_999;

/// Parses one record with the default physiologic guard.
pub fn parse_rr_record(line: &[u8]) -> Result<RrSample, HrvError> {
    parse_rr_record_with(line, &RrGuard::default())
}

pub fn parse_rr_record_with(line: &[u8], guard: &RrGuard) -> Result<RrSample, HrvError> {
    if line.len() != RECORD_LEN {
        return Err(HrvError::MalformedRecord(format!(
            "expected {RECORD_LEN} bytes, got {}",
            line.len()
        )));
    }
    if line[13] != b',' || line[18] != b'.' || line[22] != b'\n' {
        return Err(HrvError::MalformedRecord("separator mismatch".into()));
    }
    let t_ms = digits(&line[..TS_DIGITS])?;
    let whole = digits(&line[14..18])?;
    let frac = digits(&line[19..22])?;
    let rr = RrMillis::from_thousandths((whole * 1000 + frac) as u32);
    if !guard.contains(rr) {
        return Err(HrvError::MalformedRecord(format!(
            "rr_ms {rr} outside guard range"
        )));
    }
    Ok(RrSample { t_ms, rr })
}

fn digits(bytes: &[u8]) -> Result<u64, HrvError> {
    bytes.iter().try_fold(0u64, |acc, &b| {
        if b.is_ascii_digit() {
            Ok(acc * 10 + u64::from(b - b'0'))
        } else {
            Err(HrvError::MalformedRecord(format!(
                "non-digit byte 0x{b:02x}"
            )))
        }
    })
}

/// Serializes one sample. Fails only when the timestamp needs more than 13 digits.
pub fn encode_record(sample: &RrSample) -> Result<[u8; RECORD_LEN], HrvError> {
    if sample.t_ms > MAX_TIMESTAMP {
        return Err(HrvError::MalformedRecord(format!(
            "timestamp {} exceeds 13 digits",
            sample.t_ms
        )));
    }
    let mut out = [0u8; RECORD_LEN];
    put_digits(&mut out[..TS_DIGITS], sample.t_ms);
    out[13] = b',';
    let rr = u64::from(sample.rr.thousandths());
    put_digits(&mut out[14..18], rr / 1000);
    out[18] = b'.';
    put_digits(&mut out[19..22], rr % 1000);
    out[22] = b'\n';
    Ok(out)
}

fn put_digits(dst: &mut [u8], mut value: u64) {
    for slot in dst.iter_mut().rev() {
        *slot = b'0' + (value % 10) as u8;
        value /= 10;
    }
}

/// Appends the serialized samples to `out`.
pub fn write_records(samples: &[RrSample], out: &mut Vec<u8>) -> Result<(), HrvError> {
    out.reserve(samples.len() * RECORD_LEN);
    for s in samples {
        out.extend_from_slice(&encode_record(s)?);
    }
    Ok(())
}

pub fn encode_records(samples: &[RrSample]) -> Result<Vec<u8>, HrvError> {
    let mut out = Vec::new();
    write_records(samples, &mut out)?;
    Ok(out)
}

/// Parses a buffer of concatenated records. Any bad record fails the whole buffer.
pub fn parse_records(bytes: &[u8], guard: &RrGuard) -> Result<Vec<RrSample>, HrvError> {
    if !bytes.len().is_multiple_of(RECORD_LEN) {
        return Err(HrvError::MalformedRecord(format!(
            "buffer length {} is not a multiple of {RECORD_LEN}",
            bytes.len()
        )));
    }
    bytes
        .chunks_exact(RECORD_LEN)
        .enumerate()
        .map(|(i, chunk)| {
            parse_rr_record_with(chunk, guard)
                .map_err(|e| HrvError::MalformedRecord(format!("record {i}: {e}")))
        })
        .collect()
}
