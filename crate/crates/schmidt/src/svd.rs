//! One-sided Jacobi singular value decomposition for complex square kernels.
//!
//! Full decomposition followed by truncation: at the kernel sizes used here
//! (N <= 256) a full Jacobi SVD is cheap, robust, and needs no external
//! linear-algebra dependency. Columns of the input are orthogonalized by
//! right unitary rotations; the right factor is accumulated alongside.

use crate::{Result, SchmidtError};
use ndarray::Array2;
use num_complex::Complex64;

/// Truncated SVD `A ~ U diag(s) V^H` with `U`, `V` holding `m` orthonormal
/// columns and `s` the `m` largest singular values in non-increasing order.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    pub u: Array2<Complex64>,
    pub v: Array2<Complex64>,
}

/// Relative off-diagonal threshold at which a column pair counts as
/// orthogonal.
const JACOBI_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 40;

/// Computes the truncated SVD of a complex matrix by one-sided Jacobi.
///
/// `m_modes` must satisfy `1 <= m_modes <= min(rows, cols)`. A zero matrix
/// yields zero singular values with zero mode columns.
pub fn truncated_svd(matrix: &Array2<Complex64>, m_modes: usize) -> Result<SvdResult> {
    let (rows, cols) = matrix.dim();
    let max_modes = rows.min(cols);
    if m_modes == 0 || m_modes > max_modes {
        return Err(SchmidtError::BadModeCount {
            got: m_modes,
            max: max_modes,
        });
    }

    // column-major working copy
    let mut a: Vec<Complex64> = Vec::with_capacity(rows * cols);
    for c in 0..cols {
        for r in 0..rows {
            a.push(matrix[(r, c)]);
        }
    }
    let mut v: Vec<Complex64> = vec![Complex64::default(); cols * cols];
    for c in 0..cols {
        v[c * cols + c] = Complex64::new(1.0, 0.0);
    }

    let col = |c: usize, len: usize| -> std::ops::Range<usize> { c * len..(c + 1) * len };

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                // Gram entries of the column pair
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = Complex64::default();
                {
                    let (pa, qa) = (col(p, rows), col(q, rows));
                    let (pa, qa) = (&a[pa], &a[qa]);
                    for i in 0..rows {
                        app += pa[i].norm_sqr();
                        aqq += qa[i].norm_sqr();
                        apq += pa[i].conj() * qa[i];
                    }
                }
                let mag = apq.norm();
                if mag <= JACOBI_TOL * (app * aqq).sqrt() || app == 0.0 || aqq == 0.0 {
                    continue;
                }
                rotated = true;
                // 2x2 Hermitian eigenproblem: tan(2 theta) = 2|apq| / (aqq - app)
                let tau = (aqq - app) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let alpha = apq / mag; // unit phase of the off-diagonal
                let sigma = alpha * s;
                let sigma_conj = sigma.conj();
                // [A_p', A_q'] = [A_p, A_q] . [[c, sigma], [-conj(sigma), c]]
                let (lo, hi) = a.split_at_mut(q * rows);
                let pa = &mut lo[p * rows..p * rows + rows];
                let qa = &mut hi[..rows];
                for i in 0..rows {
                    let x = pa[i];
                    let y = qa[i];
                    pa[i] = x * c - y * sigma_conj;
                    qa[i] = x * sigma + y * c;
                }
                let (lo, hi) = v.split_at_mut(q * cols);
                let pv = &mut lo[p * cols..p * cols + cols];
                let qv = &mut hi[..cols];
                for i in 0..cols {
                    let x = pv[i];
                    let y = qv[i];
                    pv[i] = x * c - y * sigma_conj;
                    qv[i] = x * sigma + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // singular values = column norms, sorted descending (stable in the
    // original column index for exact ties)
    let mut norms: Vec<(usize, f64)> = (0..cols)
        .map(|c| {
            let r = col(c, rows);
            let n2: f64 = a[r].iter().map(|z| z.norm_sqr()).sum();
            (c, n2.sqrt())
        })
        .collect();
    norms.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));

    let mut singular_values = Vec::with_capacity(m_modes);
    let mut u = Array2::<Complex64>::zeros((rows, m_modes));
    let mut vm = Array2::<Complex64>::zeros((cols, m_modes));
    for (k, &(src, s)) in norms.iter().take(m_modes).enumerate() {
        singular_values.push(s);
        if s > 0.0 {
            let inv = 1.0 / s;
            for r in 0..rows {
                u[(r, k)] = a[src * rows + r] * inv;
            }
        }
        for r in 0..cols {
            vm[(r, k)] = v[src * cols + r];
        }
    }

    Ok(SvdResult {
        singular_values,
        u,
        v: vm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Deterministic pseudo-random complex matrix.
    fn random_matrix(n: usize, seed: u64) -> Array2<Complex64> {
        let mut s = seed.wrapping_mul(0x9e3779b97f4a7c15) | 1;
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        Array2::from_shape_fn((n, n), |_| c(next(), next()))
    }

    /// Independent oracle: two-sided Jacobi eigendecomposition of the
    /// Hermitian Gram matrix A^H A; singular values are the root eigenvalues.
    fn gram_eigenvalues(a: &Array2<Complex64>) -> Vec<f64> {
        let n = a.ncols();
        let mut g = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::default();
                for r in 0..a.nrows() {
                    acc += a[(r, i)].conj() * a[(r, j)];
                }
                g[(i, j)] = acc;
            }
        }
        // classical two-sided Jacobi for Hermitian matrices
        for _ in 0..60 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(g[(p, q)].norm());
                }
            }
            if off < 1e-14 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let gpq = g[(p, q)];
                    let mag = gpq.norm();
                    if mag < 1e-300 {
                        continue;
                    }
                    let app = g[(p, p)].re;
                    let aqq = g[(q, q)].re;
                    let tau = (aqq - app) / (2.0 * mag);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let cth = 1.0 / (1.0 + t * t).sqrt();
                    let sth = cth * t;
                    let alpha = gpq / mag;
                    let sigma = alpha * sth;
                    // G <- U^H G U with U = [[c, sigma], [-conj(sigma), c]]
                    for r in 0..n {
                        let x = g[(r, p)];
                        let y = g[(r, q)];
                        g[(r, p)] = x * cth - y * sigma.conj();
                        g[(r, q)] = x * sigma + y * cth;
                    }
                    for r in 0..n {
                        let x = g[(p, r)];
                        let y = g[(q, r)];
                        g[(p, r)] = x * cth - y * sigma;
                        g[(q, r)] = x * sigma.conj() + y * cth;
                    }
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| g[(i, i)].re.max(0.0).sqrt()).collect();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        eig
    }

    #[test]
    fn rank_one_matrix() {
        let n = 12;
        let a: Vec<Complex64> = (0..n).map(|i| c(0.3 + i as f64, 0.1 * i as f64)).collect();
        let b: Vec<Complex64> = (0..n).map(|i| c(1.0 - 0.05 * i as f64, 0.02)).collect();
        let m = Array2::from_shape_fn((n, n), |(i, j)| a[i] * b[j].conj());
        let svd = truncated_svd(&m, 3).unwrap();
        let na: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((svd.singular_values[0] - na * nb).abs() < 1e-10 * na * nb);
        assert!(svd.singular_values[1] < 1e-10 * na * nb);
    }

    #[test]
    fn identity_all_ones() {
        let m = Array2::from_shape_fn((8, 8), |(i, j)| {
            if i == j {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let svd = truncated_svd(&m, 8).unwrap();
        for s in &svd.singular_values {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix_gives_zero_singular_values() {
        let m = Array2::<Complex64>::zeros((6, 6));
        let svd = truncated_svd(&m, 4).unwrap();
        assert!(svd.singular_values.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn matches_gram_eigen_oracle_on_random_32x32() {
        let m = random_matrix(32, 2024);
        let svd = truncated_svd(&m, 32).unwrap();
        let oracle = gram_eigenvalues(&m);
        for (s, e) in svd.singular_values.iter().zip(&oracle) {
            assert!(
                (s - e).abs() <= 1e-8 * oracle[0],
                "jacobi {s} vs gram oracle {e}"
            );
        }
        // non-increasing order
        for w in svd.singular_values.windows(2) {
            assert!(w[0] >= w[1] - 1e-14);
        }
    }

    #[test]
    fn modes_orthonormal_and_reconstruct() {
        let n = 16;
        let m = random_matrix(n, 7);
        let svd = truncated_svd(&m, n).unwrap();
        for a in 0..n {
            for b in 0..n {
                let mut uu = Complex64::default();
                let mut vv = Complex64::default();
                for r in 0..n {
                    uu += svd.u[(r, a)].conj() * svd.u[(r, b)];
                    vv += svd.v[(r, a)].conj() * svd.v[(r, b)];
                }
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((uu.norm() - expect).abs() < 1e-8, "U^H U [{a},{b}] = {uu}");
                assert!((vv.norm() - expect).abs() < 1e-8, "V^H V [{a},{b}] = {vv}");
            }
        }
        // A = U diag(s) V^H
        let mut max_err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::default();
                for k in 0..n {
                    acc += svd.u[(i, k)] * svd.singular_values[k] * svd.v[(j, k)].conj();
                }
                max_err = max_err.max((acc - m[(i, j)]).norm());
            }
        }
        assert!(max_err < 1e-10, "reconstruction error {max_err}");
    }

    #[test]
    fn truncation_residual_bounded() {
        let n = 24;
        let m = random_matrix(n, 99);
        let keep = 6;
        let svd = truncated_svd(&m, n).unwrap();
        let sigma_next = svd.singular_values[keep];
        // residual of the rank-`keep` reconstruction in Frobenius norm is
        // sqrt(sum of discarded sigma^2) <= sigma_{m+1} sqrt(N)
        let resid: f64 = svd.singular_values[keep..]
            .iter()
            .map(|s| s * s)
            .sum::<f64>()
            .sqrt();
        assert!(resid <= sigma_next * (n as f64).sqrt() + 1e-12);
    }

    #[test]
    fn rejects_bad_mode_count() {
        let m = Array2::<Complex64>::zeros((4, 4));
        assert!(truncated_svd(&m, 0).is_err());
        assert!(truncated_svd(&m, 5).is_err());
    }
}
