//! RR-interval stream types and heart-rate-variability analytics.
//!
//! The analytics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what the engine,
//! the trusted runtime and the result files use.

pub mod algorithm;
pub mod analysis;
pub mod batch;
pub mod error;
pub mod mode;
pub mod naming;
pub mod record;
pub mod sample;
pub mod scalar;
pub mod sdnn;
pub mod spectral;
pub mod wire;

pub use algorithm::{AlgorithmKind, AnalysisAlgorithm};
pub use analysis::{identity, parse_result_body, run_algorithm};
pub use batch::{decode_plain_batch, encode_plain_batch, merge_runs, BatchHeader};
pub use error::HrvError;
pub use mode::ExecutionMode;
pub use record::{
    encode_record, encode_records, parse_records, parse_rr_record, parse_rr_record_with, RECORD_LEN,
};
pub use sample::{ClientId, RrGuard, RrMillis, RrSample, RrSeries};
pub use scalar::Scalar;
pub use sdnn::{sdnn, sdnn_of};
pub use spectral::{
    hrv_bands, hrv_bands_on, lomb_periodogram, lomb_scargle, Band, HF_BAND, LF_BAND,
};

pub type HrvResult = analysis::HrvResult<f64>;
pub type HrvResult32 = analysis::HrvResult<f32>;
pub type BandPowers = spectral::BandPowers<f64>;
pub type BandPowers32 = spectral::BandPowers<f32>;
pub type FrequencyGrid = spectral::FrequencyGrid<f64>;
pub type FrequencyGrid32 = spectral::FrequencyGrid<f32>;
pub type Periodogram = spectral::Periodogram<f64>;
pub type Periodogram32 = spectral::Periodogram<f32>;
