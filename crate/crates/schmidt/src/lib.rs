//! End-to-end Schmidt-mode pipeline for collinear SPDC: azimuthal Fourier
//! decomposition of the two-photon wavefunction into per-OAM radial kernels,
//! truncated SVD with the radial quadrature measure folded in, parametric
//! gain correction, and OAM spectra.

mod distribution;
mod kernel;
mod simulate;
mod svd;

pub use distribution::{
    assemble_distribution, gain_correct, oam_spectrum_direct, oam_spectrum_marginal,
    schmidt_number, ModalDistribution, OamSpectrum,
};
pub use kernel::{azimuthal_decompose, oam_conservation_leakage, RadialKernel};
pub use simulate::simulate;
pub use svd::{truncated_svd, SvdResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchmidtError {
    #[error(
        "angular resolution too small for ell_max = {ell_max}: need n_angular >= {needed} (Nyquist), got {got}"
    )]
    AngularNyquist {
        ell_max: i32,
        needed: usize,
        got: usize,
    },
    #[error("ell_max must be >= 1, got {0}")]
    BadEllMax(i32),
    #[error("m_modes must satisfy 1 <= m <= {max}, got {got}")]
    BadModeCount { got: usize, max: usize },
    #[error("degenerate wavefunction: all radial kernels vanish")]
    DegenerateWavefunction,
    #[error("distribution not normalized: sum = {0}")]
    NotNormalized(f64),
    #[error("direct formula requires rotational symmetry (ell_p = 0), got ell_p = {0}")]
    DirectNeedsSymmetry(i32),
    #[error("operation requires {expected} wavefunction storage")]
    WrongStorage { expected: &'static str },
    #[error("kernel list is empty or inconsistent: {0}")]
    BadKernels(String),
    #[error(transparent)]
    Optics(#[from] spdc_optics::OpticsError),
}

pub type Result<T> = std::result::Result<T, SchmidtError>;
