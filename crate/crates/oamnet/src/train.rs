//! Mini-batch Adam training with cosine learning-rate decay, per-epoch
//! validation, early stopping, and best-checkpoint retention.

use crate::condition::standardize_batch;
use crate::loss::{hybrid_loss, HybridTerms};
use crate::model::CondBatch;
use crate::{LossWeights, OamNet, OamnetError, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use spdc_dataset::{Dataset, StandardizationStats};
use spdc_nn::{Adam, Graph};
use std::io::Write;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_min: f64,
    pub patience: usize,
    pub seed: u64,
    pub weights: LossWeights,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 64,
            lr: 1e-3,
            lr_min: 1e-5,
            patience: 20,
            seed: 0,
            weights: LossWeights::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub train: HybridTerms,
    pub val: HybridTerms,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub history: Vec<EpochStats>,
    pub best_val_total: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

/// Dataset records staged for the network: standardized features, vocabulary
/// indices, and f64-renormalized targets.
pub struct PreparedData {
    pub cont: Vec<f32>,          // [N, 4]
    pub ell_p: Vec<i32>,         // [N]
    pub p_p: Vec<u32>,           // [N]
    pub targets: Arc<Vec<f64>>,  // [N, cells] renormalized
    pub count: usize,
    pub cells: usize,
}

impl PreparedData {
    pub fn from_dataset(
        data: &Dataset,
        stats: &StandardizationStats,
        model: &OamNet,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(OamnetError::EmptyData);
        }
        let cells = model.cfg.grid_cells();
        let got_m = data.header.gen.m_modes;
        let got_l = (2 * data.header.gen.ell_max + 1) as usize;
        if got_m != model.cfg.m_modes || got_l != model.cfg.ell_bins() {
            return Err(OamnetError::GridMismatch {
                expect_m: model.cfg.m_modes,
                expect_l: model.cfg.ell_bins(),
                got_m,
                got_l,
            });
        }
        let params: Vec<_> = data.records.iter().map(|r| r.params).collect();
        let cont = standardize_batch(&params, stats);
        let mut targets = Vec::with_capacity(data.len() * cells);
        for i in 0..data.len() {
            targets.extend(data.target_f64(i));
        }
        Ok(PreparedData {
            cont,
            ell_p: params.iter().map(|p| p.ell_p).collect(),
            p_p: params.iter().map(|p| p.p_p).collect(),
            targets: Arc::new(targets),
            count: data.len(),
            cells,
        })
    }

    fn gather(&self, indices: &[usize], model: &OamNet) -> Result<(CondBatch, Arc<Vec<f64>>, Arc<Vec<i32>>)> {
        let mut cont = Vec::with_capacity(indices.len() * 4);
        let mut ell = Vec::with_capacity(indices.len());
        let mut pp = Vec::with_capacity(indices.len());
        let mut targets = Vec::with_capacity(indices.len() * self.cells);
        for &i in indices {
            cont.extend_from_slice(&self.cont[i * 4..(i + 1) * 4]);
            ell.push(self.ell_p[i]);
            pp.push(self.p_p[i]);
            targets.extend_from_slice(&self.targets[i * self.cells..(i + 1) * self.cells]);
        }
        let batch = model.cond_batch(cont, &ell, &pp)?;
        Ok((batch, Arc::new(targets), Arc::new(ell)))
    }
}

fn cosine_lr(cfg: &TrainConfig, epoch: usize) -> f64 {
    if cfg.epochs <= 1 {
        return cfg.lr;
    }
    let t = epoch as f64 / (cfg.epochs - 1) as f64;
    cfg.lr_min + 0.5 * (cfg.lr - cfg.lr_min) * (1.0 + (std::f64::consts::PI * t).cos())
}

/// Sums per-batch loss terms weighted by batch size.
fn accumulate(total: &mut HybridTerms, terms: &HybridTerms, n: usize) {
    let w = n as f64;
    total.jsd += terms.jsd * w;
    total.kl += terms.kl * w;
    total.mse += terms.mse * w;
    total.wemd += terms.wemd * w;
    total.oam += terms.oam * w;
    total.total += terms.total * w;
}

fn finish(total: &mut HybridTerms, n: usize) {
    let w = n as f64;
    total.jsd /= w;
    total.kl /= w;
    total.mse /= w;
    total.wemd /= w;
    total.oam /= w;
    total.total /= w;
}

const ZERO_TERMS: HybridTerms = HybridTerms {
    jsd: 0.0,
    kl: 0.0,
    mse: 0.0,
    wemd: 0.0,
    oam: 0.0,
    total: 0.0,
};

/// Evaluates the hybrid-loss terms over a prepared split without training.
pub fn eval_terms(model: &OamNet, data: &PreparedData, weights: &LossWeights) -> Result<HybridTerms> {
    let mut total = ZERO_TERMS;
    let rows = model.cfg.m_modes;
    let cols = model.cfg.ell_bins();
    let bs = 64;
    let indices: Vec<usize> = (0..data.count).collect();
    for chunk in indices.chunks(bs) {
        let (batch, targets, ell) = data.gather(chunk, model)?;
        let mut g = Graph::new(true);
        let (_, pred) = model.forward(&mut g, &batch)?;
        let (_, terms) = hybrid_loss(&mut g, pred, targets, ell, weights, rows, cols)?;
        accumulate(&mut total, &terms, chunk.len());
    }
    finish(&mut total, data.count);
    Ok(total)
}

/// Trains in place. History is appended to `history_sink` as one JSON object
/// per epoch when given. The model ends at the best-validation parameters.
pub fn train(
    model: &mut OamNet,
    train_data: &PreparedData,
    val_data: &PreparedData,
    cfg: &TrainConfig,
    mut history_sink: Option<&mut dyn Write>,
) -> Result<TrainReport> {
    let rows = model.cfg.m_modes;
    let cols = model.cfg.ell_bins();
    let adam = Adam::default();
    let mut history = Vec::new();
    let mut best_val_total = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut best_snapshot = model.store.snapshot();
    let mut since_best = 0usize;

    for epoch in 0..cfg.epochs {
        let lr = cosine_lr(cfg, epoch);
        let mut order: Vec<usize> = (0..train_data.count).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(
            cfg.seed ^ (epoch as u64).wrapping_mul(0x9E3779B97F4A7C15),
        );
        order.shuffle(&mut rng);

        let mut train_total = ZERO_TERMS;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let (batch, targets, ell) = train_data.gather(chunk, model)?;
            let mut g = Graph::new(true);
            let (ids, pred) = model.forward(&mut g, &batch)?;
            let (loss, terms) =
                hybrid_loss(&mut g, pred, targets, ell, &cfg.weights, rows, cols)?;
            if !terms.total.is_finite() {
                return Err(OamnetError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            let mut grads = g.backward(loss).map_err(|e| match e {
                spdc_nn::NnError::NonFinite { .. } => OamnetError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                },
                other => OamnetError::Nn(other),
            })?;
            adam.step(&mut model.store, lr, &ids, &mut grads)
                .map_err(|e| match e {
                    spdc_nn::NnError::NonFiniteGrad { .. } => OamnetError::NonFiniteLoss {
                        epoch,
                        batch: batch_idx,
                    },
                    other => OamnetError::Nn(other),
                })?;
            accumulate(&mut train_total, &terms, chunk.len());
        }
        finish(&mut train_total, train_data.count);

        let val_total = eval_terms(model, val_data, &cfg.weights)?;
        let stats = EpochStats {
            epoch,
            lr,
            train: train_total,
            val: val_total,
        };
        if let Some(sink) = history_sink.as_deref_mut() {
            let line = serde_json::to_string(&stats)
                .map_err(|e| OamnetError::Header(e.to_string()))?;
            writeln!(sink, "{line}")?;
        }
        history.push(stats);

        if val_total.total < best_val_total {
            best_val_total = val_total.total;
            best_epoch = epoch;
            best_snapshot = model.store.snapshot();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                break;
            }
        }
    }

    let epochs_run = history.len();
    model.store.restore(&best_snapshot);
    Ok(TrainReport {
        history,
        best_val_total,
        best_epoch,
        epochs_run,
    })
}
