//! Flag groups shared by several commands.

use crate::context::{CliError, CliResult};
use clap::Args;
use spdc_dataset::GenConfig;
use spdc_optics::{CrystalSpec, ParamLimits, PhysicalParams, SimGrid};

/// One SPDC configuration.
#[derive(Args, Debug, Clone)]
pub struct ParamArgs {
    /// Parametric gain of the dominant mode
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    /// Crystal angle in degrees
    #[arg(long, default_value_t = 32.95)]
    pub theta: f64,
    /// Crystal length in micrometers
    #[arg(long = "l", visible_alias = "length", default_value_t = 2000.0)]
    pub l_um: f64,
    /// Pump waist in micrometers
    #[arg(long = "wp", default_value_t = 300.0)]
    pub w_p_um: f64,
    /// Pump OAM index
    #[arg(long = "ellp", default_value_t = 0, allow_hyphen_values = true)]
    pub ell_p: i32,
    /// Pump radial index
    #[arg(long = "pp", default_value_t = 0)]
    pub p_p: u32,
    /// Pump wavelength in micrometers
    #[arg(long, default_value_t = 0.355)]
    pub lambda_p: f64,
    /// Signal wavelength in micrometers (defaults to 2 x pump)
    #[arg(long)]
    pub lambda_s: Option<f64>,
}

impl ParamArgs {
    pub fn to_params(&self) -> CliResult<PhysicalParams> {
        let mut p = PhysicalParams::new(
            self.g,
            self.theta,
            self.l_um,
            self.w_p_um,
            self.ell_p,
            self.p_p,
        );
        p.lambda_p_um = self.lambda_p;
        p.lambda_s_um = self.lambda_s.unwrap_or(2.0 * self.lambda_p);
        p.validate(&ParamLimits::default())
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        Ok(p)
    }
}

/// Simulator grid flags.
#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// Radial grid points per axis
    #[arg(long = "n", default_value_t = 64)]
    pub n_radial: usize,
    /// Azimuthal grid points (power of two)
    #[arg(long = "p-angular", default_value_t = 256)]
    pub n_angular: usize,
    /// Radial cutoff in units of 1/w_p
    #[arg(long = "qmax-factor", default_value_t = spdc_optics::DEFAULT_Q_MAX_FACTOR)]
    pub q_max_factor: f64,
    /// Radial Schmidt modes retained per OAM sector
    #[arg(long = "m-modes", default_value_t = 8)]
    pub m_modes: usize,
    /// OAM sectors retained: ell in [-ellmax, ellmax]
    #[arg(long = "ellmax", default_value_t = 12)]
    pub ell_max: i32,
}

impl GridArgs {
    pub fn gen_config(&self) -> GenConfig {
        GenConfig {
            n_radial: self.n_radial,
            n_angular: self.n_angular,
            q_max_factor: self.q_max_factor,
            m_modes: self.m_modes,
            ell_max: self.ell_max,
        }
    }

    pub fn grid_for(&self, params: &PhysicalParams) -> CliResult<SimGrid> {
        Ok(SimGrid::for_params(
            params,
            self.n_radial,
            self.n_angular,
            self.q_max_factor,
        )?)
    }
}

/// Crystal selection.
#[derive(Args, Debug, Clone)]
pub struct CrystalArgs {
    /// Crystal spec file (`key = value` lines); defaults to the embedded BBO
    #[arg(long)]
    pub crystal: Option<std::path::PathBuf>,
}

impl CrystalArgs {
    pub fn to_spec(&self) -> CliResult<CrystalSpec> {
        match &self.crystal {
            Some(path) => Ok(CrystalSpec::from_key_value_file(path)?),
            None => Ok(CrystalSpec::bbo()),
        }
    }
}

/// Parses a discrete set like "-2,0,3" or "-2..4".
pub fn parse_int_set(text: &str) -> CliResult<Vec<i64>> {
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: i64 = lo
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("bad range start `{lo}`")))?;
        let hi: i64 = hi
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("bad range end `{hi}`")))?;
        if lo > hi {
            return Err(CliError::Invalid(format!("empty range {lo}..{hi}")));
        }
        Ok((lo..=hi).collect())
    } else {
        text.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| CliError::Invalid(format!("bad integer `{s}`")))
            })
            .collect()
    }
}
