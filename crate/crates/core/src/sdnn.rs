//! Time-domain variability.

use crate::error::HrvError;
use crate::sample::RrSeries;
use crate::scalar::Scalar;

pub const SDNN_MIN_SAMPLES: usize = 2;

/// Population standard deviation (1/N estimator) of the RR intervals.
pub fn sdnn<T: Scalar>(series: &RrSeries) -> Result<T, HrvError> {
    if series.len() < SDNN_MIN_SAMPLES {
        return Err(HrvError::InsufficientData {
            needed: SDNN_MIN_SAMPLES,
            got: series.len(),
        });
    }
    Ok(population_std_dev(
        series.samples().iter().map(|s| s.rr.to_scalar::<T>()),
    ))
}

/// Same as [`sdnn`] over raw values.
pub fn sdnn_of<T: Scalar>(values: &[T]) -> Result<T, HrvError> {
    if values.len() < SDNN_MIN_SAMPLES {
        return Err(HrvError::InsufficientData {
            needed: SDNN_MIN_SAMPLES,
            got: values.len(),
        });
    }
    Ok(population_std_dev(values.iter().copied()))
}

// Single pass, Welford's update.
fn population_std_dev<T: Scalar>(values: impl Iterator<Item = T>) -> T {
    let mut n = T::zero();
    let mut mean = T::zero();
    let mut m2 = T::zero();
    for x in values {
        n = n + T::one();
        let delta = x - mean;
        mean = mean + delta / n;
        m2 = m2 + delta * (x - mean);
    }
    (m2 / n).max(T::zero()).sqrt()
}
