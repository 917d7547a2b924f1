//! Aggregate metric report over a pair of (m, l) distributions.

use crate::{cosine_similarity, delta_k, jsd, kl_divergence, mae, mse, wemd, MetricError};

/// All comparison metrics between a predicted and a reference distribution.
///
/// The joint metrics (jsd, kl, mse, wemd, delta_k) are computed on the full
/// (m, l) grid; mae and cosine are computed on the l-axis marginal spectra,
/// matching how they are reported for OAM-spectrum comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub jsd: f64,
    pub kl: f64,
    pub mse: f64,
    /// Separable W1: sum of extent-scaled marginal Wasserstein distances.
    pub wemd: f64,
    pub delta_k: f64,
    pub mae: f64,
    pub cosine: f64,
}

impl MetricReport {
    /// Compare `pred` against `target`, both row-major `rows x cols` grids.
    pub fn between(
        pred: &[f64],
        target: &[f64],
        rows: usize,
        cols: usize,
    ) -> Result<Self, MetricError> {
        let marginal = |x: &[f64]| -> Vec<f64> {
            let mut m = vec![0.0f64; cols];
            for r in 0..rows {
                for c in 0..cols {
                    m[c] += x[r * cols + c];
                }
            }
            m
        };
        let sp = marginal(pred);
        let st = marginal(target);
        Ok(MetricReport {
            jsd: jsd(pred, target)?,
            kl: kl_divergence(target, pred)?,
            mse: mse(pred, target)?,
            wemd: wemd(pred, target, rows, cols)?,
            delta_k: delta_k(pred, target)?,
            mae: mae(&sp, &st)?,
            cosine: cosine_similarity(&sp, &st)?,
        })
    }

    /// Element-wise mean of several reports.
    pub fn mean(reports: &[MetricReport]) -> Option<MetricReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let mut acc = MetricReport {
            jsd: 0.0,
            kl: 0.0,
            mse: 0.0,
            wemd: 0.0,
            delta_k: 0.0,
            mae: 0.0,
            cosine: 0.0,
        };
        for r in reports {
            acc.jsd += r.jsd;
            acc.kl += r.kl;
            acc.mse += r.mse;
            acc.wemd += r.wemd;
            acc.delta_k += r.delta_k;
            acc.mae += r.mae;
            acc.cosine += r.cosine;
        }
        acc.jsd /= n;
        acc.kl /= n;
        acc.mse /= n;
        acc.wemd /= n;
        acc.delta_k /= n;
        acc.mae /= n;
        acc.cosine /= n;
        Some(acc)
    }

    /// Flat `key = value` text block.
    pub fn to_text_block(&self) -> String {
        format!(
            "jsd = {:.9e}\nkl = {:.9e}\nmse = {:.9e}\nwemd (separable W1) = {:.9e}\ndelta_k = {:.9e}\nmae = {:.9e}\ncosine = {:.9}\n",
            self.jsd, self.kl, self.mse, self.wemd, self.delta_k, self.mae, self.cosine
        )
    }

    pub fn csv_header() -> &'static str {
        "jsd,kl,mse,wemd_separable_w1,delta_k,mae,cosine"
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9}",
            self.jsd, self.kl, self.mse, self.wemd, self.delta_k, self.mae, self.cosine
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_zero_divergences() {
        let p = vec![1.0 / 8.0; 8];
        let r = MetricReport::between(&p, &p, 2, 4).unwrap();
        assert!(r.jsd.abs() < 1e-12);
        assert!(r.kl.abs() < 1e-12);
        assert_eq!(r.mse, 0.0);
        assert_eq!(r.wemd, 0.0);
        assert_eq!(r.delta_k, 0.0);
        assert_eq!(r.mae, 0.0);
        assert!((r.cosine - 1.0).abs() < 1e-12);
    }

    #[test]
    fn text_block_has_all_keys() {
        let p = vec![1.0 / 4.0; 4];
        let block = MetricReport::between(&p, &p, 2, 2).unwrap().to_text_block();
        for key in ["jsd", "kl", "mse", "wemd", "delta_k", "mae", "cosine"] {
            assert!(block.contains(key), "missing {key}");
        }
    }
}
