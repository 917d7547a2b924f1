//! Dilated same-padding 2-D cross-correlation via im2col and GEMM.

use crate::gemm;

/// Geometry of one conv application.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvDims {
    pub batch: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub h: usize,
    pub w: usize,
    pub k: usize,
    pub dilation: usize,
}

impl ConvDims {
    fn pad(&self) -> isize {
        (self.dilation * (self.k - 1) / 2) as isize
    }

    fn patch_len(&self) -> usize {
        self.c_in * self.k * self.k
    }
}

/// Gathers x [B,C,H,W] into patches [B*H*W, C*k*k] with zero fill outside.
pub(crate) fn im2col(x: &[f32], d: ConvDims, out: &mut Vec<f32>) {
    let ConvDims {
        batch,
        c_in,
        h,
        w,
        k,
        dilation,
        ..
    } = d;
    let pad = d.pad();
    let patch = d.patch_len();
    out.clear();
    out.resize(batch * h * w * patch, 0.0);
    let fill_sample = |b: usize, dst: &mut [f32]| {
        let xb = &x[b * c_in * h * w..(b + 1) * c_in * h * w];
        for oh in 0..h {
            for ow in 0..w {
                let row = &mut dst[(oh * w + ow) * patch..(oh * w + ow + 1) * patch];
                let mut col = 0;
                for c in 0..c_in {
                    let plane = &xb[c * h * w..(c + 1) * h * w];
                    for kh in 0..k {
                        let ih = oh as isize + (kh * dilation) as isize - pad;
                        for kw in 0..k {
                            let iw = ow as isize + (kw * dilation) as isize - pad;
                            if ih >= 0 && ih < h as isize && iw >= 0 && iw < w as isize {
                                row[col] = plane[ih as usize * w + iw as usize];
                            }
                            col += 1;
                        }
                    }
                }
            }
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(h * w * patch)
            .enumerate()
            .for_each(|(b, dst)| fill_sample(b, dst));
    }
    #[cfg(not(feature = "parallel"))]
    for (b, dst) in out.chunks_mut(h * w * patch).enumerate() {
        fill_sample(b, dst);
    }
}

/// Scatter-adds patch gradients [B*H*W, C*k*k] back into dx [B,C,H,W].
pub(crate) fn col2im_add(cols: &[f32], d: ConvDims, dx: &mut [f32]) {
    let ConvDims {
        c_in,
        h,
        w,
        k,
        dilation,
        ..
    } = d;
    let pad = d.pad();
    let patch = d.patch_len();
    let scatter = |b: usize, dxb: &mut [f32]| {
        let src = &cols[b * h * w * patch..(b + 1) * h * w * patch];
        for oh in 0..h {
            for ow in 0..w {
                let row = &src[(oh * w + ow) * patch..(oh * w + ow + 1) * patch];
                let mut col = 0;
                for c in 0..c_in {
                    for kh in 0..k {
                        let ih = oh as isize + (kh * dilation) as isize - pad;
                        for kw in 0..k {
                            let iw = ow as isize + (kw * dilation) as isize - pad;
                            if ih >= 0 && ih < h as isize && iw >= 0 && iw < w as isize {
                                dxb[c * h * w + ih as usize * w + iw as usize] += row[col];
                            }
                            col += 1;
                        }
                    }
                }
            }
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        dx.par_chunks_mut(c_in * h * w)
            .enumerate()
            .for_each(|(b, dxb)| scatter(b, dxb));
    }
    #[cfg(not(feature = "parallel"))]
    for (b, dxb) in dx.chunks_mut(c_in * h * w).enumerate() {
        scatter(b, dxb);
    }
}

/// Forward: out[b,co,h,w] = sum_{c,kh,kw} x[..] w[co,c,kh,kw] (+ bias[co]).
pub(crate) fn conv2d_forward(
    x: &[f32],
    weight: &[f32],
    bias: Option<&[f32]>,
    d: ConvDims,
) -> Vec<f32> {
    let rows = d.batch * d.h * d.w;
    let patch = d.patch_len();
    let mut cols = Vec::new();
    im2col(x, d, &mut cols);
    // y [rows, c_out] = cols [rows, patch] . weight^T (weight is [c_out, patch])
    let mut y = vec![0.0f32; rows * d.c_out];
    gemm::matmul_a_bt(rows, patch, d.c_out, &cols, weight, &mut y);
    // scatter to NCHW
    let hw = d.h * d.w;
    let mut out = vec![0.0f32; d.batch * d.c_out * hw];
    for b in 0..d.batch {
        for co in 0..d.c_out {
            let base = (b * d.c_out + co) * hw;
            let add = bias.map_or(0.0, |bv| bv[co]);
            for s in 0..hw {
                out[base + s] = y[(b * hw + s) * d.c_out + co] + add;
            }
        }
    }
    out
}

/// Backward: gradients for input, weight, and bias.
pub(crate) fn conv2d_backward(
    x: &[f32],
    weight: &[f32],
    grad_out: &[f32],
    d: ConvDims,
    want_dx: bool,
) -> (Option<Vec<f32>>, Vec<f32>, Vec<f32>) {
    let rows = d.batch * d.h * d.w;
    let patch = d.patch_len();
    let hw = d.h * d.w;
    // gather dY into [rows, c_out]
    let mut dy = vec![0.0f32; rows * d.c_out];
    for b in 0..d.batch {
        for co in 0..d.c_out {
            let base = (b * d.c_out + co) * hw;
            for s in 0..hw {
                dy[(b * hw + s) * d.c_out + co] = grad_out[base + s];
            }
        }
    }
    // dW [c_out, patch] = dY^T . cols
    let mut cols = Vec::new();
    im2col(x, d, &mut cols);
    let mut dw = vec![0.0f32; d.c_out * patch];
    gemm::matmul_at_b(d.c_out, rows, patch, &dy, &cols, &mut dw);
    // dbias[co] = sum over rows of dY
    let mut db = vec![0.0f32; d.c_out];
    for (co, dbv) in db.iter_mut().enumerate() {
        let mut acc = 0.0f64;
        for r in 0..rows {
            acc += dy[r * d.c_out + co] as f64;
        }
        *dbv = acc as f32;
    }
    // dX via dcols = dY . W, then col2im
    let dx = if want_dx {
        let mut dcols = vec![0.0f32; rows * patch];
        gemm::matmul(rows, d.c_out, patch, &dy, weight, &mut dcols);
        let mut dx = vec![0.0f32; d.batch * d.c_in * hw];
        col2im_add(&dcols, d, &mut dx);
        Some(dx)
    } else {
        None
    };
    (dx, dw, db)
}
