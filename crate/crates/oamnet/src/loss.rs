//! The physics-guided hybrid loss: data-driven divergence terms plus the
//! soft OAM-conservation penalty, composed from the fused loss nodes.

use crate::{LossWeights, Result};
use spdc_nn::{Graph, TensorId};
use std::sync::Arc;

/// Exact (f64) values of each loss term and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HybridTerms {
    pub jsd: f64,
    pub kl: f64,
    pub mse: f64,
    pub wemd: f64,
    pub oam: f64,
    pub total: f64,
}

/// Builds the hybrid loss node
/// `w_jsd JSD + w_kl KL(target||pred) + w_mse MSE + w_wemd WEMD + w_oam L_OAM`
/// over a [B, rows, cols] prediction. Every term value is reported in f64
/// regardless of its weight; zero-weight terms are excluded from the
/// backward composition.
pub fn hybrid_loss(
    g: &mut Graph,
    pred: TensorId,
    target: Arc<Vec<f64>>,
    ell_p: Arc<Vec<i32>>,
    weights: &LossWeights,
    rows: usize,
    cols: usize,
) -> Result<(TensorId, HybridTerms)> {
    let jsd = g.jsd_loss(pred, target.clone())?;
    let kl = g.kl_loss(pred, target.clone())?;
    let mse = g.mse_loss(pred, target.clone())?;
    let wemd = g.wemd_loss(pred, target, rows, cols)?;
    let oam = g.oam_loss(pred, ell_p, rows, cols)?;

    let all = [
        (jsd, weights.jsd),
        (kl, weights.kl),
        (mse, weights.mse),
        (wemd, weights.wemd),
        (oam, weights.oam),
    ];
    let active: Vec<(TensorId, f64)> = all.iter().cloned().filter(|&(_, w)| w != 0.0).collect();
    let (terms, ws): (Vec<TensorId>, Vec<f64>) = active.into_iter().unzip();
    let total_node = g.weighted_sum(&terms, &ws)?;

    let terms_out = HybridTerms {
        jsd: g.value_f64(jsd),
        kl: g.value_f64(kl),
        mse: g.value_f64(mse),
        wemd: g.value_f64(wemd),
        oam: g.value_f64(oam),
        total: g.value_f64(total_node),
    };
    Ok((total_node, terms_out))
}

impl HybridTerms {
    pub fn weighted_total(&self, w: &LossWeights) -> f64 {
        w.jsd * self.jsd + w.kl * self.kl + w.mse * self.mse + w.wemd * self.wemd + w.oam * self.oam
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::LossWeights;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn normalized(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.01).collect();
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        v
    }

    #[test]
    fn equal_pred_and_symmetric_target_gives_zero_loss() {
        // symmetric about ell_p/2 = 0 with mean 0: every term vanishes
        let (rows, cols) = (2usize, 5usize);
        // dyadic values survive the f32 cast exactly, so pred == target
        let mut t = vec![0.0f64; rows * cols];
        t[2] = 0.25;
        t[1] = 0.125;
        t[3] = 0.125;
        t[5 + 2] = 0.25;
        t[5 + 1] = 0.125;
        t[5 + 3] = 0.125;
        let pred_f32: Vec<f32> = t.iter().map(|&v| v as f32).collect();
        let mut g = Graph::new(true);
        let pred = g.input(&[1, rows, cols], pred_f32).unwrap();
        let (_, terms) = hybrid_loss(
            &mut g,
            pred,
            Arc::new(t),
            Arc::new(vec![0]),
            &LossWeights::default(),
            rows,
            cols,
        )
        .unwrap();
        assert!(terms.total.abs() < 1e-9, "total {}", terms.total);
    }

    #[test]
    fn e0_weights_reduce_to_jsd() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (rows, cols) = (3usize, 7usize);
        let t = normalized(&mut rng, rows * cols);
        let p = normalized(&mut rng, rows * cols);
        let p32: Vec<f32> = p.iter().map(|&v| v as f32).collect();
        let mut g = Graph::new(true);
        let pred = g.input(&[1, rows, cols], p32).unwrap();
        let e0 = LossWeights::ablation("E0").unwrap();
        let (_, terms) = hybrid_loss(
            &mut g,
            pred,
            Arc::new(t),
            Arc::new(vec![1]),
            &e0,
            rows,
            cols,
        )
        .unwrap();
        assert!((terms.total - terms.jsd).abs() < 1e-15);
    }

    #[test]
    fn e7_total_matches_hand_computed_metric_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (rows, cols) = (8usize, 25usize);
        let t = normalized(&mut rng, rows * cols);
        let p = normalized(&mut rng, rows * cols);
        let p32: Vec<f32> = p.iter().map(|&v| v as f32).collect();
        // the f32 cast perturbs the prediction; the oracle must see the same
        // values the loss node sees
        let p64: Vec<f64> = p32.iter().map(|&v| v as f64).collect();

        let mut g = Graph::new(true);
        let pred = g.input(&[1, rows, cols], p32).unwrap();
        let e7 = LossWeights::ablation("E7").unwrap();
        let (_, terms) = hybrid_loss(
            &mut g,
            pred,
            Arc::new(t.clone()),
            Arc::new(vec![2]),
            &e7,
            rows,
            cols,
        )
        .unwrap();

        // hand-computed composition from the metrics crate
        let jsd = spdc_metrics::jsd(&p64, &t).unwrap();
        let kl = spdc_metrics::kl_divergence(&t, &p64).unwrap();
        let mse = spdc_metrics::mse(&p64, &t).unwrap();
        let wemd = spdc_metrics::wemd(&p64, &t, rows, cols).unwrap();
        let expected = 1.0 * jsd + 0.2 * kl + 0.2 * mse + 0.5 * wemd + 0.1 * terms.oam;
        assert!(
            (terms.total - expected).abs() < 1e-9,
            "total {} vs hand sum {expected}",
            terms.total
        );
        assert!((terms.jsd - jsd).abs() < 1e-12);
        assert!((terms.kl - kl).abs() < 1e-12);
        assert!((terms.mse - mse).abs() < 1e-12);
        assert!((terms.wemd - wemd).abs() < 1e-12);
    }

    #[test]
    fn oam_penalty_closed_form_on_deltas() {
        // ell_p = 0, one-hot at ell = +3: mean term 9, symmetry term 1
        let (rows, cols) = (1usize, 9usize); // ell in [-4, 4]
        let mut p = vec![0.0f32; cols];
        p[7] = 1.0; // ell = +3
        let mut g = Graph::new(true);
        let pred = g.input(&[1, rows, cols], p).unwrap();
        let loss = g.oam_loss(pred, Arc::new(vec![0]), rows, cols).unwrap();
        let v = g.value_f64(loss);
        assert!((v - 10.0).abs() < 1e-9, "oam loss {v}, expected 10");
    }

    #[test]
    fn perfectly_symmetric_prediction_has_zero_oam_penalty() {
        let (rows, cols) = (1usize, 7usize); // ell in [-3, 3]
        // symmetric about ell_p/2 = 1 for ell_p = 2: S(0) = S(2), S(1) free
        let mut p = vec![0.0f32; cols];
        p[3] = 0.25; // ell = 0
        p[5] = 0.25; // ell = 2
        p[4] = 0.5; // ell = 1 (the symmetry centre)
        let mut g = Graph::new(true);
        let pred = g.input(&[1, rows, cols], p).unwrap();
        let loss = g.oam_loss(pred, Arc::new(vec![2]), rows, cols).unwrap();
        assert!(g.value_f64(loss).abs() < 1e-12);
    }
}
