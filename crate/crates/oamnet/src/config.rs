//! Model architecture and loss-weight configuration.

use serde::{Deserialize, Serialize};

/// Architecture of the surrogate network.
///
/// The default lands the parameter count near the 0.95 M budget; the
/// baseline variant removes conditioning and FiLM entirely and widens the
/// channels to stay parameter-matched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub channels: usize,
    pub dilations: Vec<usize>,
    pub kernel: usize,
    pub groups: usize,
    pub cond_hidden: usize,
    pub embed_dim: usize,
    pub m_modes: usize,
    pub ell_max: i32,
    pub ell_p_max: i32,
    pub p_p_max: u32,
    /// FiLM conditioning enabled; `false` is the unconditioned baseline.
    pub film: bool,
}

pub const PARAM_BUDGET: usize = 950_000;

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            channels: 104,
            dilations: vec![1, 2, 4, 8],
            kernel: 3,
            groups: 8,
            cond_hidden: 64,
            embed_dim: 8,
            m_modes: 8,
            ell_max: 12,
            ell_p_max: 4,
            p_p_max: 4,
            film: true,
        }
    }
}

impl ModelConfig {
    /// Parameter-matched unconditioned baseline (no FiLM, no conditioning).
    pub fn baseline() -> Self {
        ModelConfig {
            channels: 112,
            film: false,
            ..Default::default()
        }
    }

    /// A small configuration for fast trend studies and tests.
    pub fn compact(channels: usize, film: bool) -> Self {
        ModelConfig {
            channels,
            film,
            ..Default::default()
        }
    }

    pub fn ell_bins(&self) -> usize {
        (2 * self.ell_max + 1) as usize
    }

    pub fn grid_cells(&self) -> usize {
        self.m_modes * self.ell_bins()
    }

    pub fn ell_vocab(&self) -> usize {
        (2 * self.ell_p_max + 1) as usize
    }

    pub fn pp_vocab(&self) -> usize {
        self.p_p_max as usize + 1
    }

    /// Conditioning vector length: 4 standardized continuous features plus
    /// one embedding block per discrete index.
    pub fn cond_len(&self) -> usize {
        4 + 2 * self.embed_dim
    }
}

/// Weights of the hybrid loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub jsd: f64,
    pub kl: f64,
    pub mse: f64,
    pub wemd: f64,
    pub oam: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::ablation("E7").expect("E7 is a known row")
    }
}

impl LossWeights {
    /// Ablation table rows E0..E9 (JSD weight fixed at 1).
    pub fn ablation(id: &str) -> Option<LossWeights> {
        let (kl, mse, wemd, oam) = match id {
            "E0" => (0.0, 0.0, 0.0, 0.0),
            "E1" => (0.2, 0.0, 0.0, 0.0),
            "E2" => (0.0, 0.2, 0.0, 0.0),
            "E3" => (0.0, 0.0, 0.5, 0.0),
            "E4" => (0.0, 0.0, 0.0, 0.1),
            "E5" => (0.2, 0.2, 0.5, 0.0),
            "E6" => (0.2, 0.2, 0.5, 0.05),
            "E7" => (0.2, 0.2, 0.5, 0.1),
            "E8" => (0.2, 0.2, 0.5, 0.2),
            "E9" => (0.2, 0.2, 0.5, 0.3),
            _ => return None,
        };
        Some(LossWeights {
            jsd: 1.0,
            kl,
            mse,
            wemd,
            oam,
        })
    }

    pub fn ablation_ids() -> [&'static str; 10] {
        ["E0", "E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8", "E9"]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ablation_rows_match_study_table() {
        let e0 = LossWeights::ablation("E0").unwrap();
        assert_eq!((e0.jsd, e0.kl, e0.mse, e0.wemd, e0.oam), (1.0, 0.0, 0.0, 0.0, 0.0));
        let e7 = LossWeights::ablation("E7").unwrap();
        assert_eq!((e7.jsd, e7.kl, e7.mse, e7.wemd, e7.oam), (1.0, 0.2, 0.2, 0.5, 0.1));
        let e9 = LossWeights::ablation("E9").unwrap();
        assert_eq!(e9.oam, 0.3);
        assert!(LossWeights::ablation("E10").is_none());
    }

    #[test]
    fn default_grid_is_8_by_25() {
        let cfg = ModelConfig::default();
        assert_eq!(cfg.m_modes, 8);
        assert_eq!(cfg.ell_bins(), 25);
        assert_eq!(cfg.grid_cells(), 200);
        assert_eq!(cfg.cond_len(), 20);
    }
}
