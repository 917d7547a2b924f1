//! Optical front end for collinear type-I SPDC simulation: crystal
//! dispersion, phase mismatch, pump momentum profiles, and evaluation of the
//! two-photon wavefunction on a cylindrical momentum grid.
//!
//! Conventions: wavelengths and lengths in micrometers, transverse momenta in
//! rad/um, angles in degrees at every public interface (radians internally).

mod crystal;
mod grid;
mod params;
mod pump;
mod wavefunction;

pub use crystal::{
    refractive_index_e_principal, refractive_index_e_theta, refractive_index_o, CrystalSpec,
    Sellmeier,
};
pub use grid::{SimGrid, DEFAULT_Q_MAX_FACTOR};
pub use params::{ParamLimits, PhysicalParams};
pub use pump::{pump_momentum_profile, pump_radial_amplitude};
pub use wavefunction::{
    collinear_delta_k, delta_k, evaluate_wavefunction, evaluate_wavefunction_general,
    find_phase_matching_angle, sinc, wave_number_ordinary, wave_number_pump, Wavefunction3D,
    WfStorage,
};

use thiserror::Error;

/// Wavelength band over which the shipped Sellmeier fits are trusted.
pub const LAMBDA_BAND_UM: (f64, f64) = (0.3, 1.0);

#[derive(Debug, Error)]
pub enum OpticsError {
    #[error(
        "wavelength {lambda_um} um outside the valid band [{lo}, {hi}] um",
        lo = LAMBDA_BAND_UM.0,
        hi = LAMBDA_BAND_UM.1
    )]
    WavelengthOutOfRange { lambda_um: f64 },
    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),
    #[error("invalid crystal specification: {0}")]
    InvalidCrystal(String),
    #[error("crystal file `{path}`: {reason}")]
    CrystalFile { path: String, reason: String },
    #[error("evanescent transverse momentum |q| = {q_mag} >= k = {k} rad/um")]
    Evanescent { q_mag: f64, k: f64 },
    #[error("no collinear phase matching: delta-k does not change sign on ({lo}, {hi}) degrees")]
    NoPhaseMatching { lo: f64, hi: f64 },
    #[error("invalid simulation grid: {0}")]
    InvalidGrid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, OpticsError>;
