//! Physics-guided surrogate for SPDC modal distributions: a FiLM-modulated
//! dilated-convolution network conditioned on the physical parameters,
//! trained with a hybrid distribution loss plus a soft OAM-conservation
//! penalty.

mod checkpoint;
mod condition;
mod config;
mod loss;
mod model;
mod train;

pub mod eval;

pub use checkpoint::{load_checkpoint, save_checkpoint, store_equal, Checkpoint};
pub use condition::build_condition;
pub use config::{LossWeights, ModelConfig, PARAM_BUDGET};
pub use loss::{hybrid_loss, HybridTerms};
pub use model::OamNet;
pub use train::{train, EpochStats, PreparedData, TrainConfig, TrainReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OamnetError {
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("discrete input out of vocabulary: {0}")]
    OutOfVocab(String),
    #[error(
        "grid mismatch: checkpoint expects {expect_m} x {expect_l} (m_modes x ell bins), dataset provides {got_m} x {got_l}"
    )]
    GridMismatch {
        expect_m: usize,
        expect_l: usize,
        got_m: usize,
        got_l: usize,
    },
    #[error("bad checkpoint magic: expected \"OAMC\"")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("checkpoint checksum mismatch")]
    Checksum,
    #[error("truncated checkpoint")]
    Truncated,
    #[error("malformed checkpoint header: {0}")]
    Header(String),
    #[error("checkpoint parameter layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("empty dataset or split")]
    EmptyData,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Nn(#[from] spdc_nn::NnError),
    #[error(transparent)]
    Metric(#[from] spdc_metrics::MetricError),
    #[error(transparent)]
    Schmidt(#[from] spdc_schmidt::SchmidtError),
    #[error(transparent)]
    Dataset(#[from] spdc_dataset::DatasetError),
}

pub type Result<T> = std::result::Result<T, OamnetError>;

/// Checkpoint container magic.
pub const CHECKPOINT_MAGIC: &[u8; 4] = b"OAMC";
pub const CHECKPOINT_VERSION: u32 = 1;
