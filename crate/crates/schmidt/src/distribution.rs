//! Modal weight distributions, gain correction, and OAM spectra.

use crate::svd::truncated_svd;
use crate::{RadialKernel, Result, SchmidtError};
use ndarray::Array2;
use num_complex::Complex64;
use spdc_optics::{Wavefunction3D, WfStorage};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Normalized joint modal weights over the (m, ell) output grid.
///
/// `weights[(m, idx)]` holds the weight of radial mode `m` and signal OAM
/// `ell = idx - ell_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalDistribution {
    weights: Array2<f64>,
    ell_p: i32,
    gain: f64,
    /// Fraction of the wavefunction norm captured by the retained
    /// (m, ell) grid before normalization, from the low-gain assembly.
    captured_weight: f64,
}

impl ModalDistribution {
    pub fn from_weights(
        weights: Array2<f64>,
        ell_p: i32,
        gain: f64,
        captured_weight: f64,
    ) -> Result<Self> {
        let d = ModalDistribution {
            weights,
            ell_p,
            gain,
            captured_weight,
        };
        d.validate()?;
        Ok(d)
    }

    /// Rebuilds a distribution from a flat row-major (m, ell) weight slice.
    pub fn from_flat(flat: &[f64], m_modes: usize, ell_max: i32, ell_p: i32, gain: f64) -> Result<Self> {
        let cols = (2 * ell_max + 1) as usize;
        if flat.len() != m_modes * cols {
            return Err(SchmidtError::BadKernels(format!(
                "flat weight slice has {} entries, expected {} x {}",
                flat.len(),
                m_modes,
                cols
            )));
        }
        let weights = Array2::from_shape_vec((m_modes, cols), flat.to_vec())
            .expect("shape checked above");
        Self::from_weights(weights, ell_p, gain, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let mut sum = 0.0;
        for &w in self.weights.iter() {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(SchmidtError::BadKernels(format!(
                    "weight {w} is negative or non-finite"
                )));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SchmidtError::NotNormalized(sum));
        }
        Ok(())
    }

    pub fn m_modes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn ell_max(&self) -> i32 {
        (self.weights.ncols() as i32 - 1) / 2
    }

    pub fn ell_p(&self) -> i32 {
        self.ell_p
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn captured_weight(&self) -> f64 {
        self.captured_weight
    }

    /// Weight of radial mode `m` and signal OAM `ell`.
    pub fn get(&self, m: usize, ell: i32) -> f64 {
        self.weights[(m, (ell + self.ell_max()) as usize)]
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    /// Row-major flat view (m outer, ell inner).
    pub fn flat(&self) -> &[f64] {
        self.weights.as_slice().expect("row-major contiguous")
    }

    /// Signal OAM values along the column axis.
    pub fn ell_values(&self) -> impl Iterator<Item = i32> + '_ {
        -self.ell_max()..=self.ell_max()
    }

    /// The `count` largest (m, ell, weight) entries, heaviest first.
    pub fn top_modes(&self, count: usize) -> Vec<(usize, i32, f64)> {
        let ell_max = self.ell_max();
        let mut entries: Vec<(usize, i32, f64)> = self
            .weights
            .indexed_iter()
            .map(|((m, idx), &w)| (m, idx as i32 - ell_max, w))
            .collect();
        entries.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap());
        entries.truncate(count);
        entries
    }

    /// Plain text table `m, ell, weight`, one row per grid cell.
    pub fn to_text_table(&self) -> String {
        let mut out = String::from("m, ell, weight\n");
        let ell_max = self.ell_max();
        for m in 0..self.m_modes() {
            for idx in 0..self.weights.ncols() {
                out.push_str(&format!(
                    "{}, {}, {:.12e}\n",
                    m,
                    idx as i32 - ell_max,
                    self.weights[(m, idx)]
                ));
            }
        }
        out
    }
}

/// Marginal OAM spectrum S(ell) over `[-ell_max, ell_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OamSpectrum {
    probs: Vec<f64>,
    ell_max: i32,
}

impl OamSpectrum {
    pub fn new(probs: Vec<f64>, ell_max: i32) -> Result<Self> {
        if probs.len() != (2 * ell_max + 1) as usize {
            return Err(SchmidtError::BadKernels(format!(
                "spectrum length {} does not match ell_max {}",
                probs.len(),
                ell_max
            )));
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) || (sum - 1.0).abs() > 1e-9 {
            return Err(SchmidtError::NotNormalized(sum));
        }
        Ok(OamSpectrum { probs, ell_max })
    }

    pub fn ell_max(&self) -> i32 {
        self.ell_max
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, ell: i32) -> f64 {
        self.probs[(ell + self.ell_max) as usize]
    }

    pub fn peak_ell(&self) -> i32 {
        let (idx, _) = self
            .probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .expect("non-empty");
        idx as i32 - self.ell_max
    }
}

/// Runs the truncated SVD on every kernel and assembles the normalized
/// low-gain (g -> 0) modal distribution lambda_{m,ell} = sigma_{m,ell}^2.
pub fn assemble_distribution(kernels: &[RadialKernel], m_modes: usize) -> Result<ModalDistribution> {
    if kernels.is_empty() {
        return Err(SchmidtError::BadKernels("no kernels".into()));
    }
    let n = kernels[0].matrix.nrows();
    if kernels.iter().any(|k| k.matrix.dim() != (n, n)) {
        return Err(SchmidtError::BadKernels(
            "kernels have inconsistent shapes".into(),
        ));
    }
    let ell_min = kernels.iter().map(|k| k.ell).min().unwrap();
    let ell_max = kernels.iter().map(|k| k.ell).max().unwrap();
    if ell_min != -ell_max || kernels.len() != (2 * ell_max + 1) as usize {
        return Err(SchmidtError::BadKernels(format!(
            "kernel sectors must cover [-ell_max, ell_max]; got [{ell_min}, {ell_max}] with {} kernels",
            kernels.len()
        )));
    }

    let svd_of = |k: &RadialKernel| -> Result<Vec<f64>> {
        Ok(truncated_svd(&k.matrix, m_modes.min(n))?
            .singular_values
            .iter()
            .map(|s| s * s)
            .collect())
    };

    #[cfg(feature = "parallel")]
    let columns: Result<Vec<Vec<f64>>> = kernels.par_iter().map(svd_of).collect();
    #[cfg(not(feature = "parallel"))]
    let columns: Result<Vec<Vec<f64>>> = kernels.iter().map(svd_of).collect();
    let columns = columns?;

    let mut weights = Array2::<f64>::zeros((m_modes, kernels.len()));
    for (idx, lambdas) in columns.iter().enumerate() {
        for (m, &l) in lambdas.iter().enumerate() {
            if m < m_modes {
                weights[(m, idx)] = l;
            }
        }
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(SchmidtError::DegenerateWavefunction);
    }
    weights.mapv_inplace(|w| w / total);
    ModalDistribution::from_weights(weights, kernels_ell_p_hint(kernels), 0.0, total)
}

// The kernel list does not carry ell_p; infer the centre of the sector range
// (callers that know ell_p overwrite it in `simulate`).
fn kernels_ell_p_hint(_kernels: &[RadialKernel]) -> i32 {
    0
}

/// Applies the multimode parametric-gain correction
/// `w = sinh^2(g sqrt(lambda / lambda_max))`, renormalized, where
/// `lambda_max` is the dominant low-gain eigenvalue (so `g` is the gain of
/// the dominant mode). `g = 0` returns the input unchanged.
pub fn gain_correct(dist: &ModalDistribution, g: f64) -> Result<ModalDistribution> {
    dist.validate()?;
    if g < 1e-9 {
        let mut out = dist.clone();
        out.gain = g;
        return Ok(out);
    }
    let lambda_max = dist.weights.iter().cloned().fold(0.0, f64::max);
    if lambda_max <= 0.0 {
        return Err(SchmidtError::DegenerateWavefunction);
    }
    let mut weights = dist.weights.clone();
    weights.mapv_inplace(|l| (g * (l / lambda_max).sqrt()).sinh().powi(2));
    let total: f64 = weights.iter().sum();
    weights.mapv_inplace(|w| w / total);
    Ok(ModalDistribution {
        weights,
        ell_p: dist.ell_p,
        gain: g,
        captured_weight: dist.captured_weight,
    })
}

/// Schmidt number K = 1 / sum(lambda^2). Errors when the input is not
/// normalized within 1e-6.
pub fn schmidt_number(dist: &ModalDistribution) -> Result<f64> {
    let sum: f64 = dist.weights.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(SchmidtError::NotNormalized(sum));
    }
    let purity: f64 = dist.weights.iter().map(|&l| l * l).sum();
    Ok(1.0 / purity)
}

/// Column sums S(ell) = sum_m lambda_{m, ell}, renormalized.
pub fn oam_spectrum_marginal(dist: &ModalDistribution) -> Result<OamSpectrum> {
    dist.validate()?;
    let cols = dist.weights.ncols();
    let mut probs = vec![0.0f64; cols];
    for m in 0..dist.m_modes() {
        for c in 0..cols {
            probs[c] += dist.weights[(m, c)];
        }
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    OamSpectrum::new(probs, dist.ell_max())
}

/// OAM spectrum from the rotational-symmetry integral: the squared magnitude
/// of the Fourier coefficients of `W(dphi) = int int q_s q_i Phi dq_s dq_i`,
/// normalized over `[-ell_max, ell_max]`. Valid only for `ell_p = 0` on
/// reduced storage.
pub fn oam_spectrum_direct(psi: &Wavefunction3D, ell_max: i32) -> Result<OamSpectrum> {
    if psi.ell_p != 0 {
        return Err(SchmidtError::DirectNeedsSymmetry(psi.ell_p));
    }
    let values = match &psi.storage {
        WfStorage::Reduced(v) => v,
        _ => {
            return Err(SchmidtError::WrongStorage {
                expected: "reduced (N, N, P)",
            })
        }
    };
    if ell_max < 1 {
        return Err(SchmidtError::BadEllMax(ell_max));
    }
    let n = psi.grid.n_radial();
    let p = psi.grid.n_angular();
    let dphi = psi.grid.delta_phi();
    let wq = psi.grid.radial_weights();

    // radial quadrature first: W(dphi_k)
    let mut w_line = vec![Complex64::default(); p];
    for i in 0..n {
        for j in 0..n {
            let w = wq[i] * wq[j];
            for k in 0..p {
                w_line[k] += values[(i, j, k)] * w;
            }
        }
    }
    // S(ell) = |sum_k W_k exp(+i ell dphi_k) dphi|^2
    let mut probs = vec![0.0f64; (2 * ell_max + 1) as usize];
    for (idx, ell) in (-ell_max..=ell_max).enumerate() {
        let mut acc = Complex64::default();
        for (k, &wv) in w_line.iter().enumerate() {
            acc += wv * Complex64::from_polar(1.0, ell as f64 * dphi * k as f64);
        }
        probs[idx] = (acc * dphi).norm_sqr();
    }
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(SchmidtError::DegenerateWavefunction);
    }
    probs.iter_mut().for_each(|q| *q /= total);
    OamSpectrum::new(probs, ell_max)
}

pub(crate) fn set_ell_p(dist: &mut ModalDistribution, ell_p: i32) {
    dist.ell_p = ell_p;
}
