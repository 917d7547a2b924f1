//! Train/val/test splits and standardization statistics.

use crate::format::Dataset;
use crate::{DatasetError, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Per-feature mean and standard deviation of the continuous parameters
/// (g, theta_deg, L_um, w_p_um), computed on the train split only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: [f64; 4],
    pub std: [f64; 4],
}

pub const FEATURE_NAMES: [&str; 4] = ["g", "theta_deg", "l_um", "w_p_um"];

impl StandardizationStats {
    /// z-scores one parameter set in feature order.
    pub fn standardize(&self, g: f64, theta_deg: f64, l_um: f64, w_p_um: f64) -> [f64; 4] {
        let raw = [g, theta_deg, l_um, w_p_um];
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = (raw[i] - self.mean[i]) / self.std[i];
        }
        out
    }
}

/// Computes standardization statistics from a (train) dataset. Errors if any
/// feature is constant.
pub fn compute_stats(train: &Dataset) -> Result<StandardizationStats> {
    if train.is_empty() {
        return Err(DatasetError::Empty);
    }
    let n = train.len() as f64;
    let mut mean = [0.0f64; 4];
    let mut sq = [0.0f64; 4];
    for rec in &train.records {
        let f = [
            rec.params.g,
            rec.params.theta_deg,
            rec.params.l_um,
            rec.params.w_p_um,
        ];
        for i in 0..4 {
            mean[i] += f[i];
            sq[i] += f[i] * f[i];
        }
    }
    let mut std = [0.0f64; 4];
    for i in 0..4 {
        mean[i] /= n;
        let var = (sq[i] / n - mean[i] * mean[i]).max(0.0);
        std[i] = var.sqrt();
        if !(std[i] > 0.0) {
            return Err(DatasetError::ConstantFeature(FEATURE_NAMES[i]));
        }
    }
    Ok(StandardizationStats { mean, std })
}

/// Splits a dataset into disjoint, exhaustive train/val/test parts by a
/// seeded shuffle. Fractions must sum to 1.
pub fn split(
    dataset: &Dataset,
    fractions: [f64; 3],
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    let sum: f64 = fractions.iter().sum();
    if fractions.iter().any(|&f| f < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(DatasetError::BadFractions(fractions));
    }
    let n = dataset.len();
    if n == 0 {
        return Err(DatasetError::Empty);
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);

    let n_train = (fractions[0] * n as f64).round() as usize;
    let n_val = (fractions[1] * n as f64).round() as usize;
    let n_train = n_train.min(n);
    let n_val = n_val.min(n - n_train);

    let make = |idx: &[usize]| -> Dataset {
        let mut header = dataset.header.clone();
        header.count = idx.len();
        Dataset {
            header,
            records: idx.iter().map(|&i| dataset.records[i].clone()).collect(),
        }
    };
    let train = make(&indices[..n_train]);
    let val = make(&indices[n_train..n_train + n_val]);
    let test = make(&indices[n_train + n_val..]);
    Ok((train, val, test))
}
