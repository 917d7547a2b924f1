//! Sampling ranges and simulator grid configuration.

use crate::{DatasetError, Result};
use serde::{Deserialize, Serialize};

/// Uniform sampling ranges for the continuous parameters and candidate sets
/// for the discrete pump indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRanges {
    pub g: [f64; 2],
    pub theta_deg: [f64; 2],
    pub l_um: [f64; 2],
    pub w_p_um: [f64; 2],
    pub ell_p: Vec<i32>,
    pub p_p: Vec<u32>,
}

impl Default for ParamRanges {
    fn default() -> Self {
        ParamRanges {
            g: [0.02, 5.4],
            theta_deg: [32.9, 33.0],
            l_um: [850.0, 3500.0],
            w_p_um: [130.0, 670.0],
            ell_p: (-2..=4).collect(),
            p_p: (0..=4).collect(),
        }
    }
}

impl ParamRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [
            ("g", self.g),
            ("theta_deg", self.theta_deg),
            ("l_um", self.l_um),
            ("w_p_um", self.w_p_um),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(DatasetError::InvalidRange(format!(
                    "{name}: [{lo}, {hi}] must satisfy lo <= hi"
                )));
            }
        }
        if self.g[0] < 0.0 {
            return Err(DatasetError::InvalidRange("g must be >= 0".into()));
        }
        if self.ell_p.is_empty() || self.p_p.is_empty() {
            return Err(DatasetError::InvalidRange(
                "discrete sets ell_p and p_p must be non-empty".into(),
            ));
        }
        Ok(())
    }

    /// Number of discrete (ell_p, p_p) cells.
    pub fn discrete_cells(&self) -> usize {
        self.ell_p.len() * self.p_p.len()
    }
}

/// Simulator grid and output-grid configuration used for every record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_radial: usize,
    pub n_angular: usize,
    pub q_max_factor: f64,
    pub m_modes: usize,
    pub ell_max: i32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_radial: 64,
            n_angular: 256,
            q_max_factor: spdc_optics::DEFAULT_Q_MAX_FACTOR,
            m_modes: 8,
            ell_max: 12,
        }
    }
}

impl GenConfig {
    /// Flattened target length M * (2 ell_max + 1).
    pub fn target_len(&self) -> usize {
        self.m_modes * (2 * self.ell_max + 1) as usize
    }
}
