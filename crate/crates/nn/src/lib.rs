//! Minimal reverse-mode automatic differentiation on f32 tensors (up to 4
//! dimensions) with exactly the layer set the surrogate model needs, plus
//! fused distribution-loss nodes whose forward values are computed in f64
//! against the metrics-crate definitions.
//!
//! The graph is a tape rebuilt per step: builders run the forward pass
//! eagerly and record enough context for `backward`. All internal
//! parallelism uses fixed-order reductions, so results are bit-identical
//! across thread counts.

mod adam;
mod backward;
mod conv;
mod gemm;
mod graph;
pub mod init;
mod kernels;
mod losses;

pub use adam::{Adam, ParamStore, Parameter};
pub use graph::{Graph, TensorId};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("{op}: shape mismatch: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("{op}: non-finite value produced (checked mode)")]
    NonFinite { op: &'static str },
    #[error("embedding index {index} out of vocabulary {vocab}")]
    OutOfVocab { index: usize, vocab: usize },
    #[error("channels {channels} not divisible by groups {groups}")]
    BadGroups { channels: usize, groups: usize },
    #[error("backward already consumed for this graph")]
    BackwardTwice,
    #[error("backward requires a scalar loss, got {numel} elements")]
    NonScalarLoss { numel: usize },
    #[error("{op}: kernel size {k} must be odd")]
    EvenKernel { op: &'static str, k: usize },
    #[error("non-finite gradient for parameter `{name}`")]
    NonFiniteGrad { name: String },
    #[error("parameter slot {slot} was not registered in this graph")]
    UnregisteredParam { slot: usize },
    #[error(transparent)]
    Metric(#[from] spdc_metrics::MetricError),
}

pub type Result<T> = std::result::Result<T, NnError>;
