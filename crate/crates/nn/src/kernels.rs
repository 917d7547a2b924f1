//! Elementwise and normalization kernels shared by forward and backward.

pub(crate) fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

pub(crate) fn silu_forward(x: &[f32]) -> Vec<f32> {
    x.iter().map(|&v| v * sigmoid(v)).collect()
}

pub(crate) fn silu_backward(x: &[f32], grad_out: &[f32], dx: &mut [f32]) {
    for i in 0..x.len() {
        let s = sigmoid(x[i]);
        dx[i] += grad_out[i] * s * (1.0 + x[i] * (1.0 - s));
    }
}

/// Softmax over everything but the leading (batch) axis; f64 accumulators.
pub(crate) fn softmax_grid_forward(x: &[f32], batch: usize) -> Vec<f32> {
    let n = x.len() / batch;
    let mut out = vec![0.0f32; x.len()];
    for b in 0..batch {
        let xs = &x[b * n..(b + 1) * n];
        let os = &mut out[b * n..(b + 1) * n];
        let m = xs.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        let mut sum = 0.0f64;
        for i in 0..n {
            let e = ((xs[i] - m) as f64).exp();
            os[i] = e as f32;
            sum += e;
        }
        let inv = 1.0 / sum;
        for v in os.iter_mut() {
            *v = (*v as f64 * inv) as f32;
        }
    }
    out
}

pub(crate) fn softmax_grid_backward(y: &[f32], grad_out: &[f32], batch: usize, dx: &mut [f32]) {
    let n = y.len() / batch;
    for b in 0..batch {
        let ys = &y[b * n..(b + 1) * n];
        let gs = &grad_out[b * n..(b + 1) * n];
        let mut dot = 0.0f64;
        for i in 0..n {
            dot += (gs[i] * ys[i]) as f64;
        }
        let ds = &mut dx[b * n..(b + 1) * n];
        for i in 0..n {
            ds[i] += ys[i] * (gs[i] - dot as f32);
        }
    }
}

/// Per-(sample, group) statistics for GroupNorm.
pub(crate) struct GnStats {
    pub mean: Vec<f32>,
    pub rstd: Vec<f32>,
}

/// x [B,C,H,W] normalized over each (sample, group) block, then per-channel
/// affine; statistics accumulate in f64.
pub(crate) fn group_norm_forward(
    x: &[f32],
    batch: usize,
    channels: usize,
    spatial: usize,
    groups: usize,
    gamma: &[f32],
    beta: &[f32],
    eps: f32,
) -> (Vec<f32>, GnStats) {
    let cg = channels / groups;
    let block = cg * spatial;
    let mut out = vec![0.0f32; x.len()];
    let mut mean = vec![0.0f32; batch * groups];
    let mut rstd = vec![0.0f32; batch * groups];
    for b in 0..batch {
        for g in 0..groups {
            let start = (b * channels + g * cg) * spatial;
            let xs = &x[start..start + block];
            let mut sum = 0.0f64;
            let mut sq = 0.0f64;
            for &v in xs {
                sum += v as f64;
                sq += (v as f64) * (v as f64);
            }
            let n = block as f64;
            let mu = sum / n;
            let var = (sq / n - mu * mu).max(0.0);
            let r = 1.0 / (var + eps as f64).sqrt();
            mean[b * groups + g] = mu as f32;
            rstd[b * groups + g] = r as f32;
            for c in 0..cg {
                let ch = g * cg + c;
                let gam = gamma[ch];
                let bet = beta[ch];
                let xs = &x[start + c * spatial..start + (c + 1) * spatial];
                let os = &mut out[start + c * spatial..start + (c + 1) * spatial];
                for i in 0..spatial {
                    let xhat = (xs[i] - mu as f32) * r as f32;
                    os[i] = gam * xhat + bet;
                }
            }
        }
    }
    (out, GnStats { mean, rstd })
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn group_norm_backward(
    x: &[f32],
    grad_out: &[f32],
    batch: usize,
    channels: usize,
    spatial: usize,
    groups: usize,
    gamma: &[f32],
    stats: &GnStats,
    dx: &mut [f32],
    dgamma: &mut [f32],
    dbeta: &mut [f32],
) {
    let cg = channels / groups;
    let block = cg * spatial;
    // per-channel affine gradients
    for b in 0..batch {
        for ch in 0..channels {
            let g = ch / cg;
            let mu = stats.mean[b * groups + g];
            let r = stats.rstd[b * groups + g];
            let start = (b * channels + ch) * spatial;
            let mut dg = 0.0f64;
            let mut db = 0.0f64;
            for i in 0..spatial {
                let xhat = (x[start + i] - mu) * r;
                dg += (grad_out[start + i] * xhat) as f64;
                db += grad_out[start + i] as f64;
            }
            dgamma[ch] += dg as f32;
            dbeta[ch] += db as f32;
        }
    }
    // input gradient per (sample, group)
    for b in 0..batch {
        for g in 0..groups {
            let start = (b * channels + g * cg) * spatial;
            let mu = stats.mean[b * groups + g];
            let r = stats.rstd[b * groups + g];
            let n = block as f64;
            let mut sum_dxhat = 0.0f64;
            let mut sum_dxhat_xhat = 0.0f64;
            for c in 0..cg {
                let gam = gamma[g * cg + c];
                for i in 0..spatial {
                    let idx = start + c * spatial + i;
                    let dxhat = (grad_out[idx] * gam) as f64;
                    let xhat = ((x[idx] - mu) * r) as f64;
                    sum_dxhat += dxhat;
                    sum_dxhat_xhat += dxhat * xhat;
                }
            }
            let m1 = sum_dxhat / n;
            let m2 = sum_dxhat_xhat / n;
            for c in 0..cg {
                let gam = gamma[g * cg + c];
                for i in 0..spatial {
                    let idx = start + c * spatial + i;
                    let dxhat = (grad_out[idx] * gam) as f64;
                    let xhat = ((x[idx] - mu) * r) as f64;
                    dx[idx] += (r as f64 * (dxhat - m1 - xhat * m2)) as f32;
                }
            }
        }
    }
}

/// FiLM: out[b,c,s] = x[b,c,s] * (1 + gamma[b,c]) + beta[b,c], with
/// gb = [B, 2C] packing gamma then beta.
pub(crate) fn film_forward(
    x: &[f32],
    gb: &[f32],
    batch: usize,
    channels: usize,
    spatial: usize,
) -> Vec<f32> {
    let mut out = vec![0.0f32; x.len()];
    for b in 0..batch {
        for c in 0..channels {
            let gamma = gb[b * 2 * channels + c];
            let beta = gb[b * 2 * channels + channels + c];
            let start = (b * channels + c) * spatial;
            for i in 0..spatial {
                out[start + i] = x[start + i] * (1.0 + gamma) + beta;
            }
        }
    }
    out
}

pub(crate) fn film_backward(
    x: &[f32],
    gb: &[f32],
    grad_out: &[f32],
    batch: usize,
    channels: usize,
    spatial: usize,
    dx: &mut [f32],
    dgb: &mut [f32],
) {
    for b in 0..batch {
        for c in 0..channels {
            let gamma = gb[b * 2 * channels + c];
            let start = (b * channels + c) * spatial;
            let mut dgamma = 0.0f64;
            let mut dbeta = 0.0f64;
            for i in 0..spatial {
                let g = grad_out[start + i];
                dx[start + i] += g * (1.0 + gamma);
                dgamma += (g * x[start + i]) as f64;
                dbeta += g as f64;
            }
            dgb[b * 2 * channels + c] += dgamma as f32;
            dgb[b * 2 * channels + channels + c] += dbeta as f32;
        }
    }
}
