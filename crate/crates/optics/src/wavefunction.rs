//! Phase mismatch and the discretized two-photon wavefunction.

use crate::crystal::{refractive_index_e_theta, refractive_index_o};
use crate::{CrystalSpec, OpticsError, PhysicalParams, Result, SimGrid};
use ndarray::{Array3, Array4};
use num_complex::Complex64;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// sin(x)/x with the removable singularity evaluated by series below 1e-4.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Longitudinal wave number of the extraordinary pump at `theta_deg`.
pub fn wave_number_pump(params: &PhysicalParams, crystal: &CrystalSpec) -> Result<f64> {
    let n = refractive_index_e_theta(params.lambda_p_um, params.theta_deg, crystal)?;
    Ok(std::f64::consts::TAU * n / params.lambda_p_um)
}

/// Wave number of an ordinary-polarized wave at `lambda_um`.
pub fn wave_number_ordinary(lambda_um: f64, crystal: &CrystalSpec) -> Result<f64> {
    let n = refractive_index_o(lambda_um, crystal)?;
    Ok(std::f64::consts::TAU * n / lambda_um)
}

/// Longitudinal phase mismatch
/// `dk = sqrt(kp^2 - |qs+qi|^2) - sqrt(ks^2 - |qs|^2) - sqrt(ki^2 - |qi|^2)`.
///
/// Errors on evanescent inputs (|q| >= k for any of the three waves).
pub fn delta_k(
    qs: [f64; 2],
    qi: [f64; 2],
    params: &PhysicalParams,
    crystal: &CrystalSpec,
) -> Result<f64> {
    let kp = wave_number_pump(params, crystal)?;
    let ks = wave_number_ordinary(params.lambda_s_um, crystal)?;
    let ki = wave_number_ordinary(params.lambda_i_um(), crystal)?;
    let qs2 = qs[0] * qs[0] + qs[1] * qs[1];
    let qi2 = qi[0] * qi[0] + qi[1] * qi[1];
    let sx = qs[0] + qi[0];
    let sy = qs[1] + qi[1];
    let qp2 = sx * sx + sy * sy;
    for (q2, k) in [(qp2, kp), (qs2, ks), (qi2, ki)] {
        if q2 >= k * k {
            return Err(OpticsError::Evanescent {
                q_mag: q2.sqrt(),
                k,
            });
        }
    }
    Ok((kp * kp - qp2).sqrt() - ((ks * ks - qs2).sqrt() + (ki * ki - qi2).sqrt()))
}

/// Collinear (q = 0) phase mismatch as a function of crystal angle.
pub fn collinear_delta_k(
    theta_deg: f64,
    params: &PhysicalParams,
    crystal: &CrystalSpec,
) -> Result<f64> {
    let mut p = *params;
    p.theta_deg = theta_deg;
    let kp = wave_number_pump(&p, crystal)?;
    let ks = wave_number_ordinary(p.lambda_s_um, crystal)?;
    let ki = wave_number_ordinary(p.lambda_i_um(), crystal)?;
    Ok(kp - (ks + ki))
}

/// Crystal angle that zeroes the collinear phase mismatch, found by bisection
/// on (20, 50) degrees to 1e-6 degrees.
pub fn find_phase_matching_angle(params: &PhysicalParams, crystal: &CrystalSpec) -> Result<f64> {
    let (mut lo, mut hi) = (20.0f64, 50.0f64);
    let mut f_lo = collinear_delta_k(lo, params, crystal)?;
    let f_hi = collinear_delta_k(hi, params, crystal)?;
    if f_lo * f_hi > 0.0 {
        return Err(OpticsError::NoPhaseMatching { lo, hi });
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        let f_mid = collinear_delta_k(mid, params, crystal)?;
        if f_lo * f_mid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Discretized two-photon wavefunction.
#[derive(Debug, Clone)]
pub enum WfStorage {
    /// (N, N, P) over (q_s, q_i, delta-phi). For ell_p != 0 the stored values
    /// fold in the pump's centroid-angle phase exp(i ell_p xi) and, for odd
    /// ell_p, an extra exp(i delta-phi / 2) that keeps the azimuthal Fourier
    /// bins aligned with integer signal OAM.
    Reduced(Array3<Complex64>),
    /// (N, N, P, P) over (q_s, q_i, phi_s, phi_i); the reference path.
    General(Array4<Complex64>),
}

#[derive(Debug, Clone)]
pub struct Wavefunction3D {
    pub storage: WfStorage,
    pub grid: SimGrid,
    pub ell_p: i32,
    /// Grid nodes beyond the light cone whose contribution was clamped to 0.
    pub clamped_nodes: usize,
}

impl Wavefunction3D {
    /// Quadrature weight sum of |phi|^2; equals 1 after construction.
    pub fn weighted_norm(&self) -> f64 {
        let wq = self.grid.radial_weights();
        let dphi = self.grid.delta_phi();
        match &self.storage {
            WfStorage::Reduced(v) => {
                let mut total = 0.0;
                for (i, &wi) in wq.iter().enumerate() {
                    for (j, &wj) in wq.iter().enumerate() {
                        let mut s = 0.0;
                        for k in 0..self.grid.n_angular() {
                            s += v[(i, j, k)].norm_sqr();
                        }
                        total += wi * wj * s;
                    }
                }
                total * dphi * std::f64::consts::TAU
            }
            WfStorage::General(v) => {
                let mut total = 0.0;
                for (i, &wi) in wq.iter().enumerate() {
                    for (j, &wj) in wq.iter().enumerate() {
                        let mut s = 0.0;
                        for a in 0..self.grid.n_angular() {
                            for b in 0..self.grid.n_angular() {
                                s += v[(i, j, a, b)].norm_sqr();
                            }
                        }
                        total += wi * wj * s;
                    }
                }
                total * dphi * dphi
            }
        }
    }
}

struct WaveNumbers {
    kp: f64,
    ks: f64,
    ki: f64,
}

fn wave_numbers(params: &PhysicalParams, crystal: &CrystalSpec) -> Result<WaveNumbers> {
    Ok(WaveNumbers {
        kp: wave_number_pump(params, crystal)?,
        ks: wave_number_ordinary(params.lambda_s_um, crystal)?,
        ki: wave_number_ordinary(params.lambda_i_um(), crystal)?,
    })
}

/// Evaluates the two-photon wavefunction on the reduced (N, N, P) grid and
/// normalizes it so the quadrature-weighted norm is exactly 1.
///
/// Works for any integer pump OAM: the pump phase is factored as
/// `exp(i ell_p phi_sum) = exp(i ell_p (phi_s + phi_i)/2) * exp(i ell_p xi)`
/// and the second factor, which depends only on (q_s, q_i, delta-phi), is
/// folded into the stored values.
pub fn evaluate_wavefunction(
    params: &PhysicalParams,
    crystal: &CrystalSpec,
    grid: &SimGrid,
) -> Result<Wavefunction3D> {
    crystal.validate()?;
    let kn = wave_numbers(params, crystal)?;
    let n = grid.n_radial();
    let p = grid.n_angular();
    let q = grid.radial_points().to_vec();
    let wq = grid.radial_weights().to_vec();
    let dphi = grid.delta_phi();
    let half_l = 0.5 * params.l_um;
    let ell_p = params.ell_p;
    let sigma = ell_p.rem_euclid(2); // odd pump OAM needs the half-harmonic shift

    let cos_half: Vec<f64> = (0..p).map(|k| (0.5 * dphi * k as f64).cos()).collect();
    let sin_half: Vec<f64> = (0..p).map(|k| (0.5 * dphi * k as f64).sin()).collect();
    let cos_full: Vec<f64> = (0..p).map(|k| (dphi * k as f64).cos()).collect();

    let row = |i: usize| -> (Vec<Complex64>, f64, usize) {
        let qs = q[i];
        let qs2 = qs * qs;
        let a = (kn.ks * kn.ks - qs2).max(0.0).sqrt();
        let qs_evan = qs2 >= kn.ks * kn.ks;
        let mut values = vec![Complex64::default(); n * p];
        let mut norm_partial = 0.0f64;
        let mut clamped = 0usize;
        for j in 0..n {
            let qi = q[j];
            let qi2 = qi * qi;
            let b = (kn.ki * kn.ki - qi2).max(0.0).sqrt();
            let qi_evan = qi2 >= kn.ki * kn.ki;
            let mut s = 0.0f64;
            for k in 0..p {
                let qsum2 = qs2 + qi2 + 2.0 * qs * qi * cos_full[k];
                if qs_evan || qi_evan || qsum2 >= kn.kp * kn.kp {
                    clamped += 1;
                    continue;
                }
                let dk = (kn.kp * kn.kp - qsum2).sqrt() - (a + b);
                let x = dk * half_l;
                let amp = crate::pump_radial_amplitude(qsum2.sqrt(), params) * sinc(x);
                let mut val = Complex64::from_polar(amp, x);
                if ell_p != 0 {
                    // xi = arg(qs e^{i dphi/2} + qi e^{-i dphi/2})
                    let ure = (qs + qi) * cos_half[k];
                    let uim = (qs - qi) * sin_half[k];
                    let xi = uim.atan2(ure);
                    let phase = ell_p as f64 * xi + 0.5 * sigma as f64 * dphi * k as f64;
                    val *= Complex64::from_polar(1.0, phase);
                }
                values[j * p + k] = val;
                s += val.norm_sqr();
            }
            norm_partial += wq[j] * s;
        }
        (values, norm_partial * wq[i], clamped)
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<(Vec<Complex64>, f64, usize)> = (0..n).into_par_iter().map(row).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<(Vec<Complex64>, f64, usize)> = (0..n).map(row).collect();

    // fixed-order reduction keeps the result independent of thread count
    let mut norm = 0.0f64;
    let mut clamped_nodes = 0usize;
    for (_, partial, clamped) in &rows {
        norm += partial;
        clamped_nodes += clamped;
    }
    norm *= dphi * std::f64::consts::TAU;
    if !(norm > 0.0) {
        return Err(OpticsError::InvalidParams(
            "wavefunction vanishes on the entire grid".into(),
        ));
    }
    let scale = 1.0 / norm.sqrt();

    let mut values = Array3::<Complex64>::zeros((n, n, p));
    {
        let flat = values.as_slice_mut().expect("contiguous");
        for (i, (rowvals, _, _)) in rows.into_iter().enumerate() {
            for (offset, v) in rowvals.into_iter().enumerate() {
                flat[i * n * p + offset] = v * scale;
            }
        }
    }

    Ok(Wavefunction3D {
        storage: WfStorage::Reduced(values),
        grid: grid.clone(),
        ell_p,
        clamped_nodes,
    })
}

/// Evaluates the two-photon wavefunction on the full (N, N, P, P) double
/// angle grid. Memory scales as N^2 P^2; intended as the reference/oracle
/// path at small sizes.
pub fn evaluate_wavefunction_general(
    params: &PhysicalParams,
    crystal: &CrystalSpec,
    grid: &SimGrid,
) -> Result<Wavefunction3D> {
    crystal.validate()?;
    let n = grid.n_radial();
    let p = grid.n_angular();
    let elems = n * n * p * p;
    if elems > (1usize << 31) {
        return Err(OpticsError::InvalidGrid(format!(
            "general-path grid too large: {n}^2 x {p}^2 = {elems} nodes"
        )));
    }
    let kn = wave_numbers(params, crystal)?;
    let q = grid.radial_points().to_vec();
    let wq = grid.radial_weights().to_vec();
    let dphi = grid.delta_phi();
    let half_l = 0.5 * params.l_um;
    let ell_p = params.ell_p;

    let cos_phi: Vec<f64> = (0..p).map(|k| (dphi * k as f64).cos()).collect();
    let sin_phi: Vec<f64> = (0..p).map(|k| (dphi * k as f64).sin()).collect();

    let row = |i: usize| -> (Vec<Complex64>, f64, usize) {
        let qs = q[i];
        let qs2 = qs * qs;
        let a = (kn.ks * kn.ks - qs2).max(0.0).sqrt();
        let qs_evan = qs2 >= kn.ks * kn.ks;
        let mut values = vec![Complex64::default(); n * p * p];
        let mut norm_partial = 0.0f64;
        let mut clamped = 0usize;
        for j in 0..n {
            let qi = q[j];
            let qi2 = qi * qi;
            let b = (kn.ki * kn.ki - qi2).max(0.0).sqrt();
            let qi_evan = qi2 >= kn.ki * kn.ki;
            let mut s = 0.0f64;
            for ka in 0..p {
                for kb in 0..p {
                    let sx = qs * cos_phi[ka] + qi * cos_phi[kb];
                    let sy = qs * sin_phi[ka] + qi * sin_phi[kb];
                    let qsum2 = sx * sx + sy * sy;
                    if qs_evan || qi_evan || qsum2 >= kn.kp * kn.kp {
                        clamped += 1;
                        continue;
                    }
                    let dk = (kn.kp * kn.kp - qsum2).sqrt() - (a + b);
                    let x = dk * half_l;
                    let amp = crate::pump_radial_amplitude(qsum2.sqrt(), params) * sinc(x);
                    let mut val = Complex64::from_polar(amp, x);
                    if ell_p != 0 && qsum2 > 0.0 {
                        val *= Complex64::from_polar(1.0, ell_p as f64 * sy.atan2(sx));
                    }
                    values[j * p * p + ka * p + kb] = val;
                    s += val.norm_sqr();
                }
            }
            norm_partial += wq[j] * s;
        }
        (values, norm_partial * wq[i], clamped)
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<(Vec<Complex64>, f64, usize)> = (0..n).into_par_iter().map(row).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<(Vec<Complex64>, f64, usize)> = (0..n).map(row).collect();

    let mut norm = 0.0f64;
    let mut clamped_nodes = 0usize;
    for (_, partial, clamped) in &rows {
        norm += partial;
        clamped_nodes += clamped;
    }
    norm *= dphi * dphi;
    if !(norm > 0.0) {
        return Err(OpticsError::InvalidParams(
            "wavefunction vanishes on the entire grid".into(),
        ));
    }
    let scale = 1.0 / norm.sqrt();

    let mut values = Array4::<Complex64>::zeros((n, n, p, p));
    {
        let flat = values.as_slice_mut().expect("contiguous");
        for (i, (rowvals, _, _)) in rows.into_iter().enumerate() {
            for (offset, v) in rowvals.into_iter().enumerate() {
                flat[i * n * p * p + offset] = v * scale;
            }
        }
    }

    Ok(Wavefunction3D {
        storage: WfStorage::General(values),
        grid: grid.clone(),
        ell_p,
        clamped_nodes,
    })
}
