//! One SPDC configuration and its validity limits.

use crate::{OpticsError, Result};

/// Bounds on the discrete pump mode indices. The defaults bound the embedding
/// vocabularies used downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLimits {
    pub ell_p_max: i32,
    pub p_p_max: u32,
}

impl Default for ParamLimits {
    fn default() -> Self {
        ParamLimits {
            ell_p_max: 4,
            p_p_max: 4,
        }
    }
}

/// Physical parameters of one SPDC configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Dimensionless parametric gain of the dominant mode.
    pub g: f64,
    /// Crystal angle between pump propagation and optic axis, degrees.
    pub theta_deg: f64,
    /// Crystal length, micrometers.
    pub l_um: f64,
    /// Pump waist, micrometers.
    pub w_p_um: f64,
    /// Pump orbital angular momentum index.
    pub ell_p: i32,
    /// Pump radial (Laguerre-Gaussian) index.
    pub p_p: u32,
    /// Pump wavelength, micrometers.
    pub lambda_p_um: f64,
    /// Signal wavelength, micrometers (degenerate default: 2 * pump).
    pub lambda_s_um: f64,
}

impl PhysicalParams {
    pub const DEFAULT_LAMBDA_P_UM: f64 = 0.355;

    /// Degenerate configuration with the default 355 nm pump.
    pub fn new(g: f64, theta_deg: f64, l_um: f64, w_p_um: f64, ell_p: i32, p_p: u32) -> Self {
        PhysicalParams {
            g,
            theta_deg,
            l_um,
            w_p_um,
            ell_p,
            p_p,
            lambda_p_um: Self::DEFAULT_LAMBDA_P_UM,
            lambda_s_um: 2.0 * Self::DEFAULT_LAMBDA_P_UM,
        }
    }

    /// Idler wavelength from energy conservation 1/lp = 1/ls + 1/li.
    pub fn lambda_i_um(&self) -> f64 {
        1.0 / (1.0 / self.lambda_p_um - 1.0 / self.lambda_s_um)
    }

    pub fn is_degenerate(&self) -> bool {
        (self.lambda_s_um - 2.0 * self.lambda_p_um).abs() < 1e-12
    }

    pub fn validate(&self, limits: &ParamLimits) -> Result<()> {
        let fail = |msg: String| Err(OpticsError::InvalidParams(msg));
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return fail(format!("g must be >= 0, got {}", self.g));
        }
        if !(self.l_um > 0.0 && self.l_um.is_finite()) {
            return fail(format!("L_um must be > 0, got {}", self.l_um));
        }
        if !(self.w_p_um > 0.0 && self.w_p_um.is_finite()) {
            return fail(format!("w_p_um must be > 0, got {}", self.w_p_um));
        }
        if !(self.theta_deg > 0.0 && self.theta_deg < 90.0) {
            return fail(format!(
                "theta_deg must lie in (0, 90), got {}",
                self.theta_deg
            ));
        }
        if self.ell_p.abs() > limits.ell_p_max {
            return fail(format!(
                "|ell_p| = {} exceeds ell_p_max = {}",
                self.ell_p.abs(),
                limits.ell_p_max
            ));
        }
        if self.p_p > limits.p_p_max {
            return fail(format!(
                "p_p = {} exceeds p_p_max = {}",
                self.p_p, limits.p_p_max
            ));
        }
        if !(self.lambda_p_um > 0.0 && self.lambda_s_um > 0.0) {
            return fail("wavelengths must be positive".into());
        }
        if self.lambda_s_um <= self.lambda_p_um {
            return fail(format!(
                "signal wavelength {} um must exceed pump wavelength {} um",
                self.lambda_s_um, self.lambda_p_um
            ));
        }
        Ok(())
    }
}
