//! Distribution-comparison metrics used as training losses and evaluation
//! criteria for joint (m, l) modal distributions and OAM spectra.
//!
//! All logarithms are natural, so the JSD upper bound is ln 2. Probabilities
//! are smoothed with an additive epsilon inside logarithms only; sums and
//! normalization checks operate on the raw values.

mod report;

pub use report::MetricReport;

use thiserror::Error;

/// Additive smoothing applied symmetrically inside logarithms.
pub const LOG_EPS: f64 = 1e-12;

/// Tolerance on |sum - 1| for inputs that must be normalized.
pub const NORM_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("shape mismatch: left has {left} elements, right has {right}")]
    ShapeMismatch { left: usize, right: usize },
    #[error("input not normalized: sum = {sum} (|sum - 1| must be <= {NORM_TOL})")]
    NotNormalized { sum: f64 },
    #[error("grid mismatch: {rows} x {cols} grid cannot hold {len} weights")]
    GridMismatch { rows: usize, cols: usize, len: usize },
    #[error("cosine similarity undefined for zero-norm input")]
    ZeroNorm,
    #[error("empty input")]
    Empty,
}

type Result<T> = std::result::Result<T, MetricError>;

fn check_shapes(p: &[f64], q: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(MetricError::Empty);
    }
    if p.len() != q.len() {
        return Err(MetricError::ShapeMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}

fn check_normalized(p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORM_TOL {
        return Err(MetricError::NotNormalized { sum });
    }
    Ok(())
}

/// Kullback-Leibler divergence KL(p || q) = sum p ln((p+eps)/(q+eps)).
///
/// Both inputs must be normalized within [`NORM_TOL`]. The result can dip
/// slightly below zero (order eps) because of the symmetric smoothing.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    check_shapes(p, q)?;
    check_normalized(p)?;
    check_normalized(q)?;
    let mut acc = 0.0f64;
    for (&pi, &qi) in p.iter().zip(q) {
        acc += pi * ((pi + LOG_EPS) / (qi + LOG_EPS)).ln();
    }
    Ok(acc)
}

/// Jensen-Shannon divergence, symmetric and bounded by ln 2.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64> {
    check_shapes(p, q)?;
    check_normalized(p)?;
    check_normalized(q)?;
    let mut acc = 0.0f64;
    for (&pi, &qi) in p.iter().zip(q) {
        let mi = 0.5 * (pi + qi);
        acc += 0.5 * pi * ((pi + LOG_EPS) / (mi + LOG_EPS)).ln();
        acc += 0.5 * qi * ((qi + LOG_EPS) / (mi + LOG_EPS)).ln();
    }
    Ok(acc)
}

/// Mean squared difference.
pub fn mse(p: &[f64], q: &[f64]) -> Result<f64> {
    check_shapes(p, q)?;
    let acc: f64 = p.iter().zip(q).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok(acc / p.len() as f64)
}

/// Mean absolute difference.
pub fn mae(p: &[f64], q: &[f64]) -> Result<f64> {
    check_shapes(p, q)?;
    let acc: f64 = p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).sum();
    Ok(acc / p.len() as f64)
}

/// Cosine similarity sum(p q) / (|p| |q|); equals 1 for identical inputs.
pub fn cosine_similarity(p: &[f64], q: &[f64]) -> Result<f64> {
    check_shapes(p, q)?;
    let dot: f64 = p.iter().zip(q).map(|(&a, &b)| a * b).sum();
    let np: f64 = p.iter().map(|&a| a * a).sum::<f64>().sqrt();
    let nq: f64 = q.iter().map(|&a| a * a).sum::<f64>().sqrt();
    if np == 0.0 || nq == 0.0 {
        return Err(MetricError::ZeroNorm);
    }
    Ok(dot / (np * nq))
}

/// 1-D Wasserstein-1 distance between two histograms on a unit-spaced grid,
/// computed from the CDF difference; not extent-scaled.
pub fn wasserstein_1d(p: &[f64], q: &[f64]) -> Result<f64> {
    check_shapes(p, q)?;
    let mut cdf = 0.0f64;
    let mut acc = 0.0f64;
    for i in 0..p.len() - 1 {
        cdf += p[i] - q[i];
        acc += cdf.abs();
    }
    Ok(acc)
}

/// Separable Wasserstein earth-mover distance on an (m, l) grid: the sum of
/// the extent-scaled 1-D W1 distances between the m-axis marginals and the
/// l-axis marginals. Each axis contributes a value in [0, 1]; an axis with a
/// single bin contributes 0.
///
/// `p` and `q` are row-major `rows x cols` grids (rows = m, cols = l).
pub fn wemd(p: &[f64], q: &[f64], rows: usize, cols: usize) -> Result<f64> {
    check_shapes(p, q)?;
    if rows * cols != p.len() {
        return Err(MetricError::GridMismatch {
            rows,
            cols,
            len: p.len(),
        });
    }
    check_normalized(p)?;
    check_normalized(q)?;
    let marg = |x: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mut mrow = vec![0.0f64; rows];
        let mut mcol = vec![0.0f64; cols];
        for r in 0..rows {
            for c in 0..cols {
                let v = x[r * cols + c];
                mrow[r] += v;
                mcol[c] += v;
            }
        }
        (mrow, mcol)
    };
    let (pr, pc) = marg(p);
    let (qr, qc) = marg(q);
    let axis = |a: &[f64], b: &[f64]| -> Result<f64> {
        if a.len() <= 1 {
            return Ok(0.0);
        }
        Ok(wasserstein_1d(a, b)? / (a.len() - 1) as f64)
    };
    Ok(axis(&pr, &qr)? + axis(&pc, &qc)?)
}

/// Schmidt number K = 1 / sum(p_i^2) of a normalized weight vector.
pub fn schmidt_number(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(MetricError::Empty);
    }
    check_normalized(p)?;
    let purity: f64 = p.iter().map(|&a| a * a).sum();
    Ok(1.0 / purity)
}

/// Absolute Schmidt-number difference |K(p) - K(q)|.
pub fn delta_k(p: &[f64], q: &[f64]) -> Result<f64> {
    check_shapes(p, q)?;
    Ok((schmidt_number(p)? - schmidt_number(q)?).abs())
}
