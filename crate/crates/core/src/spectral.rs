//! Frequency-domain variability on the unevenly sampled RR tachogram.
//!
//! The periodogram is Lomb-Scargle evaluated directly on R-peak times, so no
//! resampling or interpolation of the tachogram is involved. Powers are
//! scaled by `1/N`, which makes the peak of a pure tone of amplitude `A`
//! approximately `A²/2` (ms²).

use serde::{Deserialize, Serialize};

use crate::error::HrvError;
use crate::sample::RrSeries;
use crate::scalar::Scalar;

pub const LOMB_MIN_SAMPLES: usize = 8;
pub const BANDS_MIN_SPAN_MS: u64 = 30_000;

pub const GRID_POINTS: usize = 512;
pub const GRID_LO_HZ: f64 = 0.01;
pub const GRID_HI_HZ: f64 = 0.50;

pub const LF_BAND: Band = Band {
    lo_hz: 0.04,
    hi_hz: 0.15,
};
pub const HF_BAND: Band = Band {
    lo_hz: 0.15,
    hi_hz: 0.40,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo_hz: f64,
    pub hi_hz: f64,
}

/// Strictly increasing, strictly positive frequencies in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid<T> {
    freqs: Vec<T>,
}

impl<T: Scalar> FrequencyGrid<T> {
    pub fn new(freqs: Vec<T>) -> Result<Self, HrvError> {
        if freqs.is_empty() {
            return Err(HrvError::InvalidGrid("empty grid"));
        }
        if freqs.iter().any(|f| !(f.is_finite() && *f > T::zero())) {
            return Err(HrvError::InvalidGrid(
                "frequencies must be finite and positive",
            ));
        }
        if freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HrvError::InvalidGrid(
                "frequencies must be strictly increasing",
            ));
        }
        Ok(FrequencyGrid { freqs })
    }

    /// `points` evenly spaced frequencies covering `[lo, hi]` inclusive.
    pub fn uniform(lo_hz: f64, hi_hz: f64, points: usize) -> Result<Self, HrvError> {
        if points < 2 || hi_hz.partial_cmp(&lo_hz) != Some(std::cmp::Ordering::Greater) {
            return Err(HrvError::InvalidGrid(
                "uniform grid needs two points and lo < hi",
            ));
        }
        let step = (hi_hz - lo_hz) / (points - 1) as f64;
        let freqs = (0..points)
            .map(|i| {
                if i == points - 1 {
                    hi_hz
                } else {
                    lo_hz + step * i as f64
                }
            })
            .map(T::lit)
            .collect();
        Self::new(freqs)
    }

    /// The fixed analysis grid: 512 points over [0.01, 0.50] Hz.
    pub fn standard() -> Self {
        Self::uniform(GRID_LO_HZ, GRID_HI_HZ, GRID_POINTS).expect("standard grid is valid")
    }

    pub fn freqs(&self) -> &[T] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram<T> {
    pub freqs: Vec<T>,
    pub power: Vec<T>,
}

impl<T: Scalar> Periodogram<T> {
    /// Index of the largest power value.
    pub fn argmax(&self) -> usize {
        self.power
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, &p)| {
                if p > best.1 {
                    (i, p)
                } else {
                    best
                }
            })
            .0
    }

    /// Trapezoidal integral of the piecewise-linear power curve over
    /// `[lo, hi]`, clipped to the grid. Edges falling between grid points
    /// are interpolated, so integrals over adjacent bands add up exactly.
    pub fn band_power(&self, band: Band) -> T {
        let lo = T::lit(band.lo_hz);
        let hi = T::lit(band.hi_hz);
        let two = T::lit(2.0);
        let mut total = T::zero();
        for i in 0..self.freqs.len().saturating_sub(1) {
            let (f0, f1) = (self.freqs[i], self.freqs[i + 1]);
            let a = f0.max(lo);
            let b = f1.min(hi);
            if b <= a {
                continue;
            }
            let (p0, p1) = (self.power[i], self.power[i + 1]);
            let at = |f: T| p0 + (p1 - p0) * (f - f0) / (f1 - f0);
            total = total + (b - a) * (at(a) + at(b)) / two;
        }
        total
    }
}

/// Lomb-Scargle periodogram of a series' mean-subtracted RR values against
/// their R-peak times (seconds since the first peak).
pub fn lomb_periodogram<T: Scalar>(
    series: &RrSeries,
    grid: &FrequencyGrid<T>,
) -> Result<Periodogram<T>, HrvError> {
    if series.len() < LOMB_MIN_SAMPLES {
        return Err(HrvError::InsufficientData {
            needed: LOMB_MIN_SAMPLES,
            got: series.len(),
        });
    }
    let t0 = series.samples()[0].t_ms;
    let times: Vec<T> = series
        .samples()
        .iter()
        .map(|s| T::lit((s.t_ms - t0) as f64 / 1000.0))
        .collect();
    let values: Vec<T> = series.rr_values();
    Ok(Periodogram {
        freqs: grid.freqs().to_vec(),
        power: lomb_scargle(&times, &values, grid.freqs()),
    })
}

/// Lomb-Scargle power of `values` sampled at `times` (seconds) for each
/// frequency in `freqs` (Hz). Zero-variance input yields exact zeros.
pub fn lomb_scargle<T: Scalar>(times: &[T], values: &[T], freqs: &[T]) -> Vec<T> {
    assert_eq!(
        times.len(),
        values.len(),
        "times and values must have equal length"
    );
    let n = values.len();
    if n == 0 || values.iter().all(|&v| v == values[0]) {
        return vec![T::zero(); freqs.len()];
    }
    let count = T::from_count(n);
    let mean = values.iter().fold(T::zero(), |acc, &v| acc + v) / count;
    let centered: Vec<T> = values.iter().map(|&v| v - mean).collect();
    let two = T::lit(2.0);
    let tiny = T::epsilon() * count;

    freqs
        .iter()
        .map(|&f| {
            let omega = two * T::PI() * f;
            let (mut yc, mut ys, mut cc, mut ss, mut cs) =
                (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
            for (&t, &y) in times.iter().zip(&centered) {
                let (s, c) = (omega * t).sin_cos();
                yc = yc + y * c;
                ys = ys + y * s;
                cc = cc + c * c;
                ss = ss + s * s;
                cs = cs + c * s;
            }
            // Phase offset omega*tau that decouples the sine and cosine terms.
            let phi = (two * cs).atan2(cc - ss) / two;
            let (sp, cp) = phi.sin_cos();
            let y_cos = cp * yc + sp * ys;
            let y_sin = cp * ys - sp * yc;
            let cos2 = cp * cp * cc + two * cp * sp * cs + sp * sp * ss;
            let sin2 = cp * cp * ss - two * cp * sp * cs + sp * sp * cc;
            let mut p = T::zero();
            if cos2 > tiny {
                p = p + y_cos * y_cos / cos2;
            }
            if sin2 > tiny {
                p = p + y_sin * y_sin / sin2;
            }
            p / count
        })
        .collect()
}

/// LF power, HF power and their HF/LF ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPowers<T> {
    pub lf_power: T,
    pub hf_power: T,
    /// `None` when LF power is zero.
    pub hf_lf_ratio: Option<T>,
}

impl<T: Scalar> BandPowers<T> {
    pub fn new(lf_power: T, hf_power: T) -> Self {
        let hf_lf_ratio = (lf_power > T::zero()).then(|| hf_power / lf_power);
        BandPowers {
            lf_power,
            hf_power,
            hf_lf_ratio,
        }
    }
}

/// Band powers on the standard grid.
pub fn hrv_bands<T: Scalar>(series: &RrSeries) -> Result<BandPowers<T>, HrvError> {
    hrv_bands_on(series, &FrequencyGrid::standard())
}

pub fn hrv_bands_on<T: Scalar>(
    series: &RrSeries,
    grid: &FrequencyGrid<T>,
) -> Result<BandPowers<T>, HrvError> {
    if series.len() < LOMB_MIN_SAMPLES {
        return Err(HrvError::InsufficientData {
            needed: LOMB_MIN_SAMPLES,
            got: series.len(),
        });
    }
    if series.span_ms() < BANDS_MIN_SPAN_MS {
        return Err(HrvError::InsufficientSpan {
            needed_ms: BANDS_MIN_SPAN_MS,
            got_ms: series.span_ms(),
        });
    }
    let pgram = lomb_periodogram(series, grid)?;
    let bands = BandPowers::new(pgram.band_power(LF_BAND), pgram.band_power(HF_BAND));
    if bands.hf_lf_ratio.is_none() {
        return Err(HrvError::UndefinedRatio);
    }
    Ok(bands)
}
