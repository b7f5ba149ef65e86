//! Seeded RR-interval generators.

use std::time::Duration;

use cardio_core::{ClientId, RrMillis, RrSample, RrSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ClientError;

/// 2019-01-01T00:00:00Z in epoch milliseconds.
pub const DEFAULT_START_MS: u64 = 1_546_300_800_000;
pub const DEFAULT_JITTER_PCT: f64 = 5.0;
/// Mean RR used for the values of rate-driven streams.
pub const RATE_DRIVEN_MEAN_RR_MS: f64 = 800.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SensorMode {
    Physiologic { hr_bpm: f64 },
    RateDriven { s_rate: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorConfig {
    pub client_id: ClientId,
    pub mode: SensorMode,
    pub seed: u64,
    pub jitter_pct: f64,
    pub start_ms: u64,
}

impl SensorConfig {
    pub fn physiologic(client_id: ClientId, hr_bpm: f64, seed: u64) -> Self {
        SensorConfig {
            client_id,
            mode: SensorMode::Physiologic { hr_bpm },
            seed,
            jitter_pct: DEFAULT_JITTER_PCT,
            start_ms: DEFAULT_START_MS,
        }
    }

    pub fn rate_driven(client_id: ClientId, s_rate: f64, seed: u64) -> Self {
        SensorConfig {
            client_id,
            mode: SensorMode::RateDriven { s_rate },
            seed,
            jitter_pct: DEFAULT_JITTER_PCT,
            start_ms: DEFAULT_START_MS,
        }
    }

    pub fn with_jitter(mut self, jitter_pct: f64) -> Self {
        self.jitter_pct = jitter_pct;
        self
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        let bad = |m: String| {
            Err(ClientError::InvalidSensor(format!(
                "{}: {m}",
                self.client_id
            )))
        };
        match self.mode {
            SensorMode::Physiologic { hr_bpm } if !(60.0..=180.0).contains(&hr_bpm) => {
                return bad(format!("heart rate {hr_bpm} outside 60..=180 bpm"));
            }
            SensorMode::RateDriven { s_rate } if !(s_rate.is_finite() && s_rate > 0.0) => {
                return bad(format!("sample rate must be positive, got {s_rate}"));
            }
            _ => {}
        }
        if !(0.0..100.0).contains(&self.jitter_pct) {
            return bad(format!("jitter {}% outside [0, 100)", self.jitter_pct));
        }
        Ok(())
    }
}

/// Draws one RR value uniformly from `mean·(1 ± jitter)`.
fn draw_rr(rng: &mut ChaCha8Rng, mean_ms: f64, jitter_pct: f64) -> RrMillis {
    let spread = mean_ms * jitter_pct / 100.0;
    let ms = if spread > 0.0 {
        rng.gen_range(mean_ms - spread..=mean_ms + spread)
    } else {
        mean_ms
    };
    RrMillis::from_millis_f64(ms)
}

/// Generates `duration` worth of samples.
///
/// Physiologic: each RR drawn around `60000 / hr_bpm`; a beat's timestamp is
/// the cumulative RR, floored to the millisecond, and beats up to and
/// including `start + duration` are kept.
///
/// Rate-driven: exactly `⌊s_rate · duration⌋` samples with evenly spaced
/// synthetic timestamps, each at the end of its slot. Above 1000 samples/s
/// the spacing is clamped to one millisecond so timestamps stay strictly
/// increasing. Values are drawn around a fixed mean RR.
pub fn generate_rr(config: &SensorConfig, duration: Duration) -> Result<RrSeries, ClientError> {
    config.validate()?;
    if duration.is_zero() {
        return Err(ClientError::InvalidSensor(
            "duration must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let samples = match config.mode {
        SensorMode::Physiologic { hr_bpm } => {
            let mean = 60_000.0 / hr_bpm;
            let end_thousandths = duration.as_micros() as u64;
            let mut elapsed: u64 = 0;
            let mut out =
                Vec::with_capacity((duration.as_secs_f64() * hr_bpm / 60.0 * 1.2) as usize + 2);
            loop {
                let rr = draw_rr(&mut rng, mean, config.jitter_pct);
                elapsed += u64::from(rr.thousandths());
                if elapsed > end_thousandths {
                    break;
                }
                out.push(RrSample::new(config.start_ms + elapsed / 1000, rr));
            }
            out
        }
        SensorMode::RateDriven { s_rate } => {
            let n = (s_rate * duration.as_secs_f64()).floor() as u64;
            let spacing_ms = 1000.0 / s_rate;
            (0..n)
                .map(|i| {
                    let slot = i + 1;
                    let offset = if spacing_ms >= 1.0 {
                        (slot as f64 * spacing_ms).floor() as u64
                    } else {
                        slot
                    };
                    RrSample::new(
                        config.start_ms + offset,
                        draw_rr(&mut rng, RATE_DRIVEN_MEAN_RR_MS, config.jitter_pct),
                    )
                })
                .collect()
        }
    };
    Ok(RrSeries::new(config.client_id.clone(), samples)?)
}
