//! Labeled-dataset machinery: parameter sampling, simulator-driven record
//! generation, a versioned binary container with per-record checksums,
//! train/val/test splits, and standardization statistics.

mod format;
mod generate;
mod ranges;
mod sample;
mod stats;

pub use format::{load_dataset, save_dataset, Dataset, DatasetHeader, DatasetRecord};
pub use generate::{generate_dataset, provenance_hash, CrystalConfig};
pub use ranges::{GenConfig, ParamRanges};
pub use sample::sample_params;
pub use stats::{compute_stats, split, StandardizationStats};

use thiserror::Error;

/// On-disk magic of the dataset container.
pub const DATASET_MAGIC: &[u8; 4] = b"OAMD";
/// Container format version.
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic: expected \"OAMD\"")]
    BadMagic,
    #[error("unsupported dataset version {got} (supported: {DATASET_VERSION})")]
    BadVersion { got: u32 },
    #[error("truncated dataset payload at record {index}")]
    Truncated { index: usize },
    #[error("checksum failure at record {index}")]
    Checksum { index: usize },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("invalid parameter range: {0}")]
    InvalidRange(String),
    #[error("record {index} target invalid: {reason}")]
    InvalidTarget { index: usize, reason: String },
    #[error(
        "resample rate exceeded: {resampled} resamples over {n} samples (> 1%); last failure: {last_error}"
    )]
    ResampleRate {
        resampled: usize,
        n: usize,
        last_error: String,
    },
    #[error("split fractions {0:?} must be non-negative and sum to 1")]
    BadFractions([f64; 3]),
    #[error("standardization failed: feature `{0}` has zero variance (std > 0 violated)")]
    ConstantFeature(&'static str),
    #[error("dataset is empty")]
    Empty,
    #[error(transparent)]
    Optics(#[from] spdc_optics::OpticsError),
    #[error(transparent)]
    Schmidt(#[from] spdc_schmidt::SchmidtError),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// SplitMix-style derivation of a per-(seed, index, attempt) RNG stream so
/// parallel generation is schedule-independent.
pub(crate) fn derive_stream(seed: u64, index: u64, attempt: u64) -> u64 {
    let mut z = seed
        ^ index.wrapping_mul(0x9E3779B97F4A7C15)
        ^ attempt.wrapping_mul(0xD1B54A32D192ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
