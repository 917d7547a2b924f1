//! Azimuthal Fourier decomposition of the two-photon wavefunction into
//! per-OAM radial kernels with the quadrature measure folded in.

use crate::{Result, SchmidtError};
use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use spdc_optics::{Wavefunction3D, WfStorage};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Radial kernel of one signal-OAM sector. For pump OAM `ell_p` the idler
/// OAM of this sector is `ell_p - ell`. The matrix is pre-multiplied by
/// `sqrt(q_s dq_s) . sqrt(q_i dq_i)` so that discrete singular vectors are
/// orthonormal under the continuum inner product and so that
/// `sum_ell ||K_ell||_F^2` equals the quadrature-weighted norm of the
/// wavefunction.
#[derive(Debug, Clone)]
pub struct RadialKernel {
    /// Signal OAM index of this sector.
    pub ell: i32,
    pub matrix: Array2<Complex64>,
}

impl RadialKernel {
    pub fn energy(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn check_nyquist(psi: &Wavefunction3D, ell_max: i32) -> Result<()> {
    if ell_max < 1 {
        return Err(SchmidtError::BadEllMax(ell_max));
    }
    let p = psi.grid.n_angular();
    let needed = 4 * ell_max as usize;
    if p < needed {
        return Err(SchmidtError::AngularNyquist {
            ell_max,
            needed,
            got: p,
        });
    }
    Ok(())
}

/// Decomposes the wavefunction into `2 ell_max + 1` radial kernels for signal
/// OAM `ell` in `[-ell_max, ell_max]`.
///
/// Reduced storage: one FFT along the delta-phi axis; Fourier bin n maps to
/// signal OAM `ell = n + floor_div(ell_p, 2)` (the stored values already
/// carry the centroid-angle phase and the odd-`ell_p` half-harmonic shift).
/// General storage: a 2-D FFT over both angles, retaining the OAM-conserving
/// diagonal `ell_s + ell_i = ell_p`.
pub fn azimuthal_decompose(psi: &Wavefunction3D, ell_max: i32) -> Result<Vec<RadialKernel>> {
    check_nyquist(psi, ell_max)?;
    match &psi.storage {
        WfStorage::Reduced(_) => decompose_reduced(psi, ell_max),
        WfStorage::General(_) => decompose_general(psi, ell_max),
    }
}

fn decompose_reduced(psi: &Wavefunction3D, ell_max: i32) -> Result<Vec<RadialKernel>> {
    let values = match &psi.storage {
        WfStorage::Reduced(v) => v,
        _ => unreachable!(),
    };
    let n = psi.grid.n_radial();
    let p = psi.grid.n_angular();
    let dphi = psi.grid.delta_phi();
    let wq = psi.grid.radial_weights();
    let sqw: Vec<f64> = wq.iter().map(|w| w.sqrt()).collect();
    let shift = psi.ell_p.div_euclid(2);
    let n_kernels = (2 * ell_max + 1) as usize;

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(p);

    // per radial row: FFT every delta-phi line, keep the selected bins
    let row = |i: usize| -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); n * n_kernels];
        let mut line = vec![Complex64::default(); p];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for j in 0..n {
            for k in 0..p {
                line[k] = values[(i, j, k)];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            let scale = dphi * sqw[i] * sqw[j];
            for (idx, ell) in (-ell_max..=ell_max).enumerate() {
                let bin = (ell - shift).rem_euclid(p as i32) as usize;
                out[j * n_kernels + idx] = line[bin] * scale;
            }
        }
        out
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<Complex64>> = (0..n).into_par_iter().map(row).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<Complex64>> = (0..n).map(row).collect();

    let mut kernels: Vec<RadialKernel> = (-ell_max..=ell_max)
        .map(|ell| RadialKernel {
            ell,
            matrix: Array2::zeros((n, n)),
        })
        .collect();
    for (i, rowvals) in rows.iter().enumerate() {
        for j in 0..n {
            for idx in 0..n_kernels {
                kernels[idx].matrix[(i, j)] = rowvals[j * n_kernels + idx];
            }
        }
    }
    Ok(kernels)
}

fn decompose_general(psi: &Wavefunction3D, ell_max: i32) -> Result<Vec<RadialKernel>> {
    let values = match &psi.storage {
        WfStorage::General(v) => v,
        _ => unreachable!(),
    };
    let n = psi.grid.n_radial();
    let p = psi.grid.n_angular();
    let dphi = psi.grid.delta_phi();
    let wq = psi.grid.radial_weights();
    let sqw: Vec<f64> = wq.iter().map(|w| w.sqrt()).collect();
    let ell_p = psi.ell_p;
    let n_kernels = (2 * ell_max + 1) as usize;

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(p);

    // 2-D FFT of each (phi_s, phi_i) slice; retain only the conserving
    // diagonal bins (ell, ell_p - ell)
    let row = |i: usize| -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); n * n_kernels];
        let mut slice = vec![Complex64::default(); p * p];
        let mut col = vec![Complex64::default(); p];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for j in 0..n {
            for a in 0..p {
                for b in 0..p {
                    slice[a * p + b] = values[(i, j, a, b)];
                }
            }
            // rows: transform over phi_i
            for a in 0..p {
                fft.process_with_scratch(&mut slice[a * p..(a + 1) * p], &mut scratch);
            }
            // columns: transform over phi_s, only at the idler bins we need
            let scale = dphi * dphi / std::f64::consts::TAU * sqw[i] * sqw[j];
            for (idx, ell) in (-ell_max..=ell_max).enumerate() {
                let bin_i = (ell_p - ell).rem_euclid(p as i32) as usize;
                for a in 0..p {
                    col[a] = slice[a * p + bin_i];
                }
                fft.process_with_scratch(&mut col, &mut scratch);
                let bin_s = ell.rem_euclid(p as i32) as usize;
                out[j * n_kernels + idx] = col[bin_s] * scale;
            }
        }
        out
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<Complex64>> = (0..n).into_par_iter().map(row).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<Complex64>> = (0..n).map(row).collect();

    let mut kernels: Vec<RadialKernel> = (-ell_max..=ell_max)
        .map(|ell| RadialKernel {
            ell,
            matrix: Array2::zeros((n, n)),
        })
        .collect();
    for (i, rowvals) in rows.iter().enumerate() {
        for j in 0..n {
            for idx in 0..n_kernels {
                kernels[idx].matrix[(i, j)] = rowvals[j * n_kernels + idx];
            }
        }
    }
    Ok(kernels)
}

/// Fraction of azimuthal Fourier energy lying off the OAM-conserving
/// diagonal `ell_s + ell_i = ell_p`. Requires general (double-angle) storage.
pub fn oam_conservation_leakage(psi: &Wavefunction3D) -> Result<f64> {
    let values = match &psi.storage {
        WfStorage::General(v) => v,
        _ => {
            return Err(SchmidtError::WrongStorage {
                expected: "general (N, N, P, P)",
            })
        }
    };
    let n = psi.grid.n_radial();
    let p = psi.grid.n_angular();
    let wq = psi.grid.radial_weights().to_vec();
    let ell_p = psi.ell_p;

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(p);

    let row = |i: usize| -> (f64, f64) {
        let mut slice = vec![Complex64::default(); p * p];
        let mut col = vec![Complex64::default(); p];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let mut total = 0.0f64;
        let mut diag = 0.0f64;
        for j in 0..n {
            for a in 0..p {
                for b in 0..p {
                    slice[a * p + b] = values[(i, j, a, b)];
                }
            }
            for a in 0..p {
                fft.process_with_scratch(&mut slice[a * p..(a + 1) * p], &mut scratch);
            }
            let mut slice_total = 0.0f64;
            let mut slice_diag = 0.0f64;
            for b in 0..p {
                for a in 0..p {
                    col[a] = slice[a * p + b];
                }
                fft.process_with_scratch(&mut col, &mut scratch);
                // signed bin for idler axis b, then the conserving signal bin
                let ni = if b < p / 2 { b as i32 } else { b as i32 - p as i32 };
                let ns = (ell_p - ni).rem_euclid(p as i32) as usize;
                for (a, v) in col.iter().enumerate() {
                    let e = v.norm_sqr();
                    slice_total += e;
                    if a == ns {
                        slice_diag += e;
                    }
                }
            }
            let w = wq[i] * wq[j];
            total += w * slice_total;
            diag += w * slice_diag;
        }
        (total, diag)
    };

    #[cfg(feature = "parallel")]
    let parts: Vec<(f64, f64)> = (0..n).into_par_iter().map(row).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(f64, f64)> = (0..n).map(row).collect();

    let mut total = 0.0;
    let mut diag = 0.0;
    for (t, d) in parts {
        total += t;
        diag += d;
    }
    if total == 0.0 {
        return Err(SchmidtError::DegenerateWavefunction);
    }
    Ok(((total - diag) / total).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use spdc_optics::SimGrid;

    /// Synthetic reduced wavefunction f(q_s) g(q_i) exp(i mode dphi).
    fn synthetic(n: usize, p: usize, mode: i32) -> Wavefunction3D {
        let grid = SimGrid::new(n, p, 0.05).unwrap();
        let q = grid.radial_points().to_vec();
        let values = Array3::from_shape_fn((n, n, p), |(i, j, k)| {
            let f = (-(q[i] / 0.02) * (q[i] / 0.02)).exp();
            let g = (-(q[j] / 0.03) * (q[j] / 0.03)).exp();
            let phase = mode as f64 * std::f64::consts::TAU * k as f64 / p as f64;
            Complex64::from_polar(f * g, phase)
        });
        Wavefunction3D {
            storage: WfStorage::Reduced(values),
            grid,
            ell_p: 0,
            clamped_nodes: 0,
        }
    }

    #[test]
    fn single_fourier_mode_lands_in_one_kernel() {
        let psi = synthetic(16, 64, 3);
        let kernels = azimuthal_decompose(&psi, 5).unwrap();
        assert_eq!(kernels.len(), 11);
        let energies: Vec<f64> = kernels.iter().map(|k| k.energy()).collect();
        let max = energies.iter().cloned().fold(0.0, f64::max);
        for k in &kernels {
            if k.ell == 3 {
                assert!(k.energy() > 0.0);
                assert!((k.energy() - max).abs() < 1e-12 * max);
            } else {
                assert!(
                    k.energy() < 1e-20 * max,
                    "ell = {} leaked energy {}",
                    k.ell,
                    k.energy()
                );
            }
        }
    }

    #[test]
    fn parseval_total_energy_matches_weighted_norm() {
        // full-bin sum: decompose with the largest admissible ell_max and
        // fold the remaining bins in by direct DFT on one synthetic mode mix
        let n = 16;
        let p = 64;
        let grid = SimGrid::new(n, p, 0.05).unwrap();
        let q = grid.radial_points().to_vec();
        let values = Array3::from_shape_fn((n, n, p), |(i, j, k)| {
            let f = (-(q[i] / 0.02) * (q[i] / 0.02)).exp();
            let g = (-(q[j] / 0.03) * (q[j] / 0.03)).exp();
            let t = std::f64::consts::TAU * k as f64 / p as f64;
            Complex64::new(f * g * (1.0 + 0.5 * t.cos() + 0.25 * (2.0 * t).sin()), 0.0)
        });
        let psi = Wavefunction3D {
            storage: WfStorage::Reduced(values),
            grid,
            ell_p: 0,
            clamped_nodes: 0,
        };
        // this synthetic mix only occupies |ell| <= 2, so ell_max = 8 captures
        // every nonzero bin
        let kernels = azimuthal_decompose(&psi, 8).unwrap();
        let total: f64 = kernels.iter().map(|k| k.energy()).sum();
        let norm = psi.weighted_norm();
        assert!(
            (total - norm).abs() < 1e-8 * norm,
            "kernel energy {total} vs weighted norm {norm}"
        );
    }

    #[test]
    fn nyquist_bound_reported() {
        let psi = synthetic(16, 64, 0);
        let err = azimuthal_decompose(&psi, 17).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("68") && msg.contains("64"), "{msg}");
        assert!(azimuthal_decompose(&psi, 0).is_err());
    }

    #[test]
    fn degenerate_kernels_symmetric_for_zero_pump_oam() {
        use spdc_optics::{evaluate_wavefunction, CrystalSpec, PhysicalParams, SimGrid};
        let params = PhysicalParams::new(0.2, 32.92, 2000.0, 300.0, 0, 1);
        let grid = SimGrid::for_params(&params, 16, 64, 10.0).unwrap();
        let psi = evaluate_wavefunction(&params, &CrystalSpec::bbo(), &grid).unwrap();
        let kernels = azimuthal_decompose(&psi, 6).unwrap();
        for k in &kernels {
            let m = &k.matrix;
            let mut dev = 0.0f64;
            for i in 0..16 {
                for j in 0..16 {
                    dev = dev.max((m[(i, j)] - m[(j, i)]).norm());
                }
            }
            assert!(dev < 1e-10, "ell = {}: transpose deviation {dev}", k.ell);
        }
    }
}
