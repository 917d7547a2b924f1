//! Conditioning-vector assembly from physical parameters.

use crate::model::out_of_vocab;
use crate::{ModelConfig, OamNet, Result};
use spdc_dataset::StandardizationStats;
use spdc_optics::PhysicalParams;

pub(crate) fn ell_index(ell_p: i32, cfg: &ModelConfig) -> Result<usize> {
    if ell_p.abs() > cfg.ell_p_max {
        return Err(out_of_vocab("ell_p", ell_p as i64, cfg.ell_p_max as i64));
    }
    Ok((ell_p + cfg.ell_p_max) as usize)
}

pub(crate) fn pp_index(p_p: u32, cfg: &ModelConfig) -> Result<usize> {
    if p_p > cfg.p_p_max {
        return Err(out_of_vocab("p_p", p_p as i64, cfg.p_p_max as i64));
    }
    Ok(p_p as usize)
}

/// The conditioning vector: z-scored continuous features [g, theta, L, w_p]
/// concatenated with the embedding rows of the discrete indices. This is the
/// same composition the forward pass builds in-graph; exposed for inspection
/// and round-trip tests.
pub fn build_condition(
    params: &PhysicalParams,
    stats: &StandardizationStats,
    model: &OamNet,
) -> Result<Vec<f32>> {
    let cfg = &model.cfg;
    let z = stats.standardize(params.g, params.theta_deg, params.l_um, params.w_p_um);
    let mut out: Vec<f32> = z.iter().map(|&v| v as f32).collect();
    if cfg.film {
        let e = cfg.embed_dim;
        let ell_slot = model.slot_by_name("embed.ell").expect("film model");
        let pp_slot = model.slot_by_name("embed.pp").expect("film model");
        let ei = ell_index(params.ell_p, cfg)?;
        let pi = pp_index(params.p_p, cfg)?;
        out.extend_from_slice(&model.store.params[ell_slot].data[ei * e..(ei + 1) * e]);
        out.extend_from_slice(&model.store.params[pp_slot].data[pi * e..(pi + 1) * e]);
    }
    Ok(out)
}

/// Standardizes a slice of parameter sets into the flat [B, 4] block.
pub(crate) fn standardize_batch(
    params: &[PhysicalParams],
    stats: &StandardizationStats,
) -> Vec<f32> {
    let mut out = Vec::with_capacity(params.len() * 4);
    for p in params {
        let z = stats.standardize(p.g, p.theta_deg, p.l_um, p.w_p_um);
        out.extend(z.iter().map(|&v| v as f32));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ModelConfig;

    fn stats() -> StandardizationStats {
        StandardizationStats {
            mean: [1.0, 32.95, 2000.0, 300.0],
            std: [0.5, 0.05, 700.0, 150.0],
        }
    }

    fn tiny_model() -> OamNet {
        OamNet::new(
            ModelConfig {
                channels: 16,
                dilations: vec![1],
                cond_hidden: 16,
                embed_dim: 4,
                m_modes: 4,
                ell_max: 3,
                ..Default::default()
            },
            3,
        )
    }

    #[test]
    fn mean_params_give_zero_continuous_block() {
        let model = tiny_model();
        let p = PhysicalParams::new(1.0, 32.95, 2000.0, 300.0, 0, 0);
        let v = build_condition(&p, &stats(), &model).unwrap();
        assert_eq!(v.len(), 4 + 2 * 4);
        for &x in &v[..4] {
            assert!(x.abs() < 1e-12);
        }
    }

    #[test]
    fn differing_ell_p_changes_only_first_embedding_block() {
        let model = tiny_model();
        let a = PhysicalParams::new(0.7, 32.93, 1500.0, 250.0, 1, 2);
        let mut b = a;
        b.ell_p = -2;
        let va = build_condition(&a, &stats(), &model).unwrap();
        let vb = build_condition(&b, &stats(), &model).unwrap();
        assert_eq!(&va[..4], &vb[..4]);
        assert_ne!(&va[4..8], &vb[4..8]);
        assert_eq!(&va[8..12], &vb[8..12]);
    }
}
