//! Algorithm dispatch and the line-oriented `key=value` result body.
//!
//! Bodies are what result files contain and what crosses the trust
//! boundary, so rendering is the single point where results become bytes:
//!
//! ```text
//! identity:  rr=1546300800000,0857.100      (one line per sample)
//! sdnn:      sdnn_ms=8.165
//! hrvbands:  lf_power=...  hf_power=...  hf_lf_ratio=...
//! ```

use std::fmt::Write as _;

use crate::algorithm::AlgorithmKind;
use crate::error::HrvError;
use crate::record::{encode_record, parse_rr_record_with};
use crate::sample::{RrGuard, RrSample, RrSeries};
use crate::scalar::Scalar;
use crate::sdnn::sdnn;
use crate::spectral::{hrv_bands, BandPowers};

#[derive(Debug, Clone, PartialEq)]
pub enum HrvResult<T> {
    Identity(Vec<RrSample>),
    Sdnn { sdnn_ms: T },
    Bands(BandPowers<T>),
}

impl<T: Scalar> HrvResult<T> {
    pub fn kind(&self) -> AlgorithmKind {
        match self {
            HrvResult::Identity(_) => AlgorithmKind::Identity,
            HrvResult::Sdnn { .. } => AlgorithmKind::Sdnn,
            HrvResult::Bands(_) => AlgorithmKind::HrvBands,
        }
    }

    /// Renders the result body. ms quantities use three decimals, spectral
    /// powers and the ratio six.
    pub fn render(&self) -> String {
        let mut out = String::new();
        match self {
            HrvResult::Identity(samples) => {
                out.reserve(samples.len() * 26);
                for s in samples {
                    let rec = encode_record(s).expect("identity output re-encodes its own input");
                    out.push_str("rr=");
                    // Record minus its newline is plain ASCII.
                    out.push_str(std::str::from_utf8(&rec[..22]).expect("ascii record"));
                    out.push('\n');
                }
            }
            HrvResult::Sdnn { sdnn_ms } => {
                let _ = writeln!(out, "sdnn_ms={:.3}", to_f64(*sdnn_ms));
            }
            HrvResult::Bands(b) => {
                let _ = writeln!(out, "lf_power={:.6}", to_f64(b.lf_power));
                let _ = writeln!(out, "hf_power={:.6}", to_f64(b.hf_power));
                match b.hf_lf_ratio {
                    Some(r) => {
                        let _ = writeln!(out, "hf_lf_ratio={:.6}", to_f64(r));
                    }
                    None => out.push_str("hf_lf_ratio=undefined\n"),
                }
            }
        }
        out
    }
}

fn to_f64<T: Scalar>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Runs `kind` over a series.
pub fn run_algorithm<T: Scalar>(
    kind: AlgorithmKind,
    series: &RrSeries,
) -> Result<HrvResult<T>, HrvError> {
    match kind {
        AlgorithmKind::Identity => Ok(identity(series)),
        AlgorithmKind::Sdnn => Ok(HrvResult::Sdnn {
            sdnn_ms: sdnn(series)?,
        }),
        AlgorithmKind::HrvBands => Ok(HrvResult::Bands(hrv_bands(series)?)),
    }
}

pub fn identity<T>(series: &RrSeries) -> HrvResult<T> {
    HrvResult::Identity(series.samples().to_vec())
}

/// Parses a rendered body back into a result at rendered precision.
/// An empty body is an empty identity result.
pub fn parse_result_body(body: &str) -> Result<HrvResult<f64>, HrvError> {
    let bad = |msg: String| HrvError::MalformedResult(msg);
    let mut lines = body.lines().peekable();
    let first_key = match lines.peek() {
        None => return Ok(HrvResult::Identity(Vec::new())),
        Some(line) => line
            .split_once('=')
            .map(|(k, _)| k)
            .ok_or_else(|| bad(format!("no '=' in {line:?}")))?,
    };
    let value_of = |line: &str, key: &str| -> Result<String, HrvError> {
        match line.split_once('=') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(bad(format!("expected key {key}, got {line:?}"))),
        }
    };
    let number = |v: &str| {
        v.parse::<f64>()
            .map_err(|_| bad(format!("bad number {v:?}")))
    };
    match first_key {
        "rr" => {
            let guard = RrGuard::default();
            lines
                .map(|line| {
                    let v = value_of(line, "rr")?;
                    let mut rec = v.into_bytes();
                    rec.push(b'\n');
                    parse_rr_record_with(&rec, &guard)
                })
                .collect::<Result<Vec<_>, _>>()
                .map(HrvResult::Identity)
        }
        "sdnn_ms" => {
            let v = value_of(lines.next().unwrap_or_default(), "sdnn_ms")?;
            expect_end(lines)?;
            Ok(HrvResult::Sdnn {
                sdnn_ms: number(&v)?,
            })
        }
        "lf_power" => {
            let lf = number(&value_of(lines.next().unwrap_or_default(), "lf_power")?)?;
            let hf = number(&value_of(lines.next().unwrap_or_default(), "hf_power")?)?;
            let ratio = value_of(lines.next().unwrap_or_default(), "hf_lf_ratio")?;
            expect_end(lines)?;
            let hf_lf_ratio = if ratio == "undefined" {
                None
            } else {
                Some(number(&ratio)?)
            };
            Ok(HrvResult::Bands(BandPowers {
                lf_power: lf,
                hf_power: hf,
                hf_lf_ratio,
            }))
        }
        other => Err(bad(format!("unknown result key {other:?}"))),
    }
}

fn expect_end<'a>(mut lines: impl Iterator<Item = &'a str>) -> Result<(), HrvError> {
    match lines.next() {
        None => Ok(()),
        Some(extra) => Err(HrvError::MalformedResult(format!(
            "unexpected line {extra:?}"
        ))),
    }
}
