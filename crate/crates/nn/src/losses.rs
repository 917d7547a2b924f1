//! Fused distribution-loss nodes. Forward values are computed in f64 by the
//! metrics-crate definitions on exactly promoted inputs (batch mean);
//! backward passes use the hand-derived gradients of those same formulas.

use crate::Result;
use spdc_metrics::LOG_EPS;

/// Batch-mean KL(target || pred).
pub(crate) fn kl_forward(pred: &[f32], target: &[f64], batch: usize) -> Result<f64> {
    let n = pred.len() / batch;
    let mut acc = 0.0f64;
    for b in 0..batch {
        let p: Vec<f64> = pred[b * n..(b + 1) * n].iter().map(|&v| v as f64).collect();
        acc += spdc_metrics::kl_divergence(&target[b * n..(b + 1) * n], &p)?;
    }
    Ok(acc / batch as f64)
}

pub(crate) fn kl_backward(pred: &[f32], target: &[f64], batch: usize, gout: f32, dx: &mut [f32]) {
    let scale = gout as f64 / batch as f64;
    for i in 0..pred.len() {
        dx[i] += (-target[i] / (pred[i] as f64 + LOG_EPS) * scale) as f32;
    }
}

/// Batch-mean Jensen-Shannon divergence.
pub(crate) fn jsd_forward(pred: &[f32], target: &[f64], batch: usize) -> Result<f64> {
    let n = pred.len() / batch;
    let mut acc = 0.0f64;
    for b in 0..batch {
        let p: Vec<f64> = pred[b * n..(b + 1) * n].iter().map(|&v| v as f64).collect();
        acc += spdc_metrics::jsd(&p, &target[b * n..(b + 1) * n])?;
    }
    Ok(acc / batch as f64)
}

pub(crate) fn jsd_backward(pred: &[f32], target: &[f64], batch: usize, gout: f32, dx: &mut [f32]) {
    let scale = gout as f64 / batch as f64;
    for i in 0..pred.len() {
        let p = pred[i] as f64;
        let t = target[i];
        let m = 0.5 * (p + t);
        let d = 0.5 * ((p + LOG_EPS) / (m + LOG_EPS)).ln() + 0.5 * p / (p + LOG_EPS)
            - (p + t) / (4.0 * (m + LOG_EPS));
        dx[i] += (d * scale) as f32;
    }
}

/// Batch-mean MSE over the full grid.
pub(crate) fn mse_forward(pred: &[f32], target: &[f64], batch: usize) -> Result<f64> {
    let n = pred.len() / batch;
    let mut acc = 0.0f64;
    for b in 0..batch {
        let p: Vec<f64> = pred[b * n..(b + 1) * n].iter().map(|&v| v as f64).collect();
        acc += spdc_metrics::mse(&p, &target[b * n..(b + 1) * n])?;
    }
    Ok(acc / batch as f64)
}

pub(crate) fn mse_backward(pred: &[f32], target: &[f64], batch: usize, gout: f32, dx: &mut [f32]) {
    let n = pred.len() / batch;
    let scale = gout as f64 * 2.0 / (batch as f64 * n as f64);
    for i in 0..pred.len() {
        dx[i] += ((pred[i] as f64 - target[i]) * scale) as f32;
    }
}

/// Batch-mean separable Wasserstein EMD on the (rows, cols) grid.
pub(crate) fn wemd_forward(
    pred: &[f32],
    target: &[f64],
    batch: usize,
    rows: usize,
    cols: usize,
) -> Result<f64> {
    let n = rows * cols;
    let mut acc = 0.0f64;
    for b in 0..batch {
        let p: Vec<f64> = pred[b * n..(b + 1) * n].iter().map(|&v| v as f64).collect();
        acc += spdc_metrics::wemd(&p, &target[b * n..(b + 1) * n], rows, cols)?;
    }
    Ok(acc / batch as f64)
}

/// d W1(axis) / d marginal_j = 1/(len-1) * sum_{k >= j} sign(cdf_k), where the
/// CDF difference runs over the first len-1 bins.
fn w1_marginal_grad(pm: &[f64], qm: &[f64]) -> Vec<f64> {
    let len = pm.len();
    let mut grad = vec![0.0f64; len];
    if len <= 1 {
        return grad;
    }
    let mut cdf = 0.0f64;
    let mut signs = Vec::with_capacity(len - 1);
    for k in 0..len - 1 {
        cdf += pm[k] - qm[k];
        signs.push(if cdf > 0.0 {
            1.0
        } else if cdf < 0.0 {
            -1.0
        } else {
            0.0
        });
    }
    // suffix sums: bin j influences every cdf_k with k >= j
    let scale = 1.0 / (len - 1) as f64;
    let mut suffix = 0.0f64;
    for j in (0..len - 1).rev() {
        suffix += signs[j];
        grad[j] = suffix * scale;
    }
    grad
}

pub(crate) fn wemd_backward(
    pred: &[f32],
    target: &[f64],
    batch: usize,
    rows: usize,
    cols: usize,
    gout: f32,
    dx: &mut [f32],
) {
    let n = rows * cols;
    let scale = gout as f64 / batch as f64;
    for b in 0..batch {
        let p = &pred[b * n..(b + 1) * n];
        let t = &target[b * n..(b + 1) * n];
        let mut prow = vec![0.0f64; rows];
        let mut pcol = vec![0.0f64; cols];
        let mut trow = vec![0.0f64; rows];
        let mut tcol = vec![0.0f64; cols];
        for r in 0..rows {
            for c in 0..cols {
                prow[r] += p[r * cols + c] as f64;
                pcol[c] += p[r * cols + c] as f64;
                trow[r] += t[r * cols + c];
                tcol[c] += t[r * cols + c];
            }
        }
        let grow = w1_marginal_grad(&prow, &trow);
        let gcol = w1_marginal_grad(&pcol, &tcol);
        let ds = &mut dx[b * n..(b + 1) * n];
        for r in 0..rows {
            for c in 0..cols {
                ds[r * cols + c] += ((grow[r] + gcol[c]) * scale) as f32;
            }
        }
    }
}

/// Soft OAM-conservation penalty, batch mean over samples:
///   (sum_l l S(l) - ell_p/2)^2 + 1/2 sum_l (S(l) - S(ell_p - l))^2
/// with S the l-axis marginal of the prediction and out-of-grid mirror terms
/// treated as zero.
pub(crate) fn oam_forward(
    pred: &[f32],
    ell_p: &[i32],
    batch: usize,
    rows: usize,
    cols: usize,
) -> f64 {
    let ell_max = (cols as i32 - 1) / 2;
    let n = rows * cols;
    let mut acc = 0.0f64;
    for b in 0..batch {
        let p = &pred[b * n..(b + 1) * n];
        let mut s = vec![0.0f64; cols];
        for r in 0..rows {
            for c in 0..cols {
                s[c] += p[r * cols + c] as f64;
            }
        }
        let lp = ell_p[b] as f64;
        let mut mean_l = 0.0f64;
        for (c, &sv) in s.iter().enumerate() {
            mean_l += (c as i32 - ell_max) as f64 * sv;
        }
        let a = mean_l - 0.5 * lp;
        let mut sym = 0.0f64;
        for (c, &sv) in s.iter().enumerate() {
            let ell = c as i32 - ell_max;
            let mirror = ell_p[b] - ell;
            let sm = if mirror.abs() <= ell_max {
                s[(mirror + ell_max) as usize]
            } else {
                0.0
            };
            sym += (sv - sm) * (sv - sm);
        }
        acc += a * a + 0.5 * sym;
    }
    acc / batch as f64
}

pub(crate) fn oam_backward(
    pred: &[f32],
    ell_p: &[i32],
    batch: usize,
    rows: usize,
    cols: usize,
    gout: f32,
    dx: &mut [f32],
) {
    let ell_max = (cols as i32 - 1) / 2;
    let n = rows * cols;
    let scale = gout as f64 / batch as f64;
    for b in 0..batch {
        let p = &pred[b * n..(b + 1) * n];
        let mut s = vec![0.0f64; cols];
        for r in 0..rows {
            for c in 0..cols {
                s[c] += p[r * cols + c] as f64;
            }
        }
        let lp = ell_p[b] as f64;
        let mut mean_l = 0.0f64;
        for (c, &sv) in s.iter().enumerate() {
            mean_l += (c as i32 - ell_max) as f64 * sv;
        }
        let a = mean_l - 0.5 * lp;
        // dL/dS(ell)
        let mut dsdl = vec![0.0f64; cols];
        for c in 0..cols {
            let ell = c as i32 - ell_max;
            let mut d = 2.0 * a * ell as f64;
            let mirror = ell_p[b] - ell;
            if mirror.abs() <= ell_max {
                // both the (ell) term and the mirrored (ell_p - ell) term
                d += 2.0 * (s[c] - s[(mirror + ell_max) as usize]);
            } else {
                d += s[c];
            }
            dsdl[c] = d;
        }
        let ds = &mut dx[b * n..(b + 1) * n];
        for r in 0..rows {
            for c in 0..cols {
                ds[r * cols + c] += (dsdl[c] * scale) as f32;
            }
        }
    }
}
