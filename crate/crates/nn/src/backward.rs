//! Reverse pass: topological (tape-order) gradient accumulation.

use crate::conv::conv2d_backward;
use crate::graph::{Graph, Op, TensorId};
use crate::kernels::{film_backward, group_norm_backward, silu_backward, softmax_grid_backward};
use crate::{losses, NnError, Result};

/// Gradients aligned with graph node ids.
pub struct Grads {
    grads: Vec<Option<Vec<f32>>>,
}

impl Grads {
    pub fn of(&self, id: TensorId) -> Option<&[f32]> {
        self.grads.get(id).and_then(|g| g.as_deref())
    }

    pub fn take(&mut self, id: TensorId) -> Option<Vec<f32>> {
        self.grads.get_mut(id).and_then(|g| g.take())
    }
}

fn ensure(slot: &mut Option<Vec<f32>>, len: usize) -> &mut Vec<f32> {
    slot.get_or_insert_with(|| vec![0.0f32; len])
}

impl Graph {
    /// Accumulates gradients of a scalar loss into every reachable
    /// gradient-requiring node. Consumes the tape: a second call errors.
    pub fn backward(&mut self, loss: TensorId) -> Result<Grads> {
        if self.backward_done {
            return Err(NnError::BackwardTwice);
        }
        self.backward_done = true;
        let n_loss: usize = self.nodes[loss].shape.iter().product();
        if n_loss != 1 {
            return Err(NnError::NonScalarLoss { numel: n_loss });
        }

        let mut grads: Vec<Option<Vec<f32>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss] = Some(vec![1.0]);

        for id in (0..=loss).rev() {
            let Some(gout) = grads[id].take() else {
                continue;
            };
            if !self.nodes[id].needs_grad {
                continue;
            }
            // re-tuck the gradient so callers can read it afterwards
            let node_len = self.nodes[id].data.len();
            match &self.nodes[id].op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.nodes[a].needs_grad {
                        let ga = ensure(&mut grads[a], node_len);
                        for i in 0..node_len {
                            ga[i] += gout[i];
                        }
                    }
                    if self.nodes[b].needs_grad {
                        let gb = ensure(&mut grads[b], node_len);
                        for i in 0..node_len {
                            gb[i] += gout[i];
                        }
                    }
                }
                Op::Sub(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.nodes[a].needs_grad {
                        let ga = ensure(&mut grads[a], node_len);
                        for i in 0..node_len {
                            ga[i] += gout[i];
                        }
                    }
                    if self.nodes[b].needs_grad {
                        let gb = ensure(&mut grads[b], node_len);
                        for i in 0..node_len {
                            gb[i] -= gout[i];
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.nodes[a].needs_grad {
                        let vb: Vec<f32> = self.nodes[b].data.clone();
                        let ga = ensure(&mut grads[a], node_len);
                        for i in 0..node_len {
                            ga[i] += gout[i] * vb[i];
                        }
                    }
                    if self.nodes[b].needs_grad {
                        let va: Vec<f32> = self.nodes[a].data.clone();
                        let gb = ensure(&mut grads[b], node_len);
                        for i in 0..node_len {
                            gb[i] += gout[i] * va[i];
                        }
                    }
                }
                Op::Scale(a, f) => {
                    let (a, f) = (*a, *f);
                    if self.nodes[a].needs_grad {
                        let ga = ensure(&mut grads[a], node_len);
                        for i in 0..node_len {
                            ga[i] += gout[i] * f;
                        }
                    }
                }
                Op::Matmul { a, b } => {
                    let (a, b) = (*a, *b);
                    let m = self.nodes[a].shape[0];
                    let k = self.nodes[a].shape[1];
                    let n = self.nodes[b].shape[1];
                    if self.nodes[a].needs_grad {
                        // dA = dC . B^T
                        let mut da = vec![0.0f32; m * k];
                        crate::gemm::matmul_a_bt(m, n, k, &gout, &self.nodes[b].data, &mut da);
                        let ga = ensure(&mut grads[a], m * k);
                        for i in 0..m * k {
                            ga[i] += da[i];
                        }
                    }
                    if self.nodes[b].needs_grad {
                        // dB = A^T . dC
                        let mut db = vec![0.0f32; k * n];
                        crate::gemm::matmul_at_b(k, m, n, &self.nodes[a].data, &gout, &mut db);
                        let gb = ensure(&mut grads[b], k * n);
                        for i in 0..k * n {
                            gb[i] += db[i];
                        }
                    }
                }
                Op::BiasAdd { x, bias } => {
                    let (x, bias) = (*x, *bias);
                    let c = self.nodes[bias].shape[0];
                    let r = node_len / c;
                    if self.nodes[x].needs_grad {
                        let gx = ensure(&mut grads[x], node_len);
                        for i in 0..node_len {
                            gx[i] += gout[i];
                        }
                    }
                    if self.nodes[bias].needs_grad {
                        let gb = ensure(&mut grads[bias], c);
                        for col in 0..c {
                            let mut acc = 0.0f64;
                            for row in 0..r {
                                acc += gout[row * c + col] as f64;
                            }
                            gb[col] += acc as f32;
                        }
                    }
                }
                Op::Embedding { table, indices } => {
                    let table = *table;
                    let indices = indices.clone();
                    let dim = self.nodes[table].shape[1];
                    if self.nodes[table].needs_grad {
                        let gt = ensure(&mut grads[table], self.nodes[table].data.len());
                        for (row, &idx) in indices.iter().enumerate() {
                            for d in 0..dim {
                                gt[idx * dim + d] += gout[row * dim + d];
                            }
                        }
                    }
                }
                Op::Concat { parts } => {
                    let parts = parts.clone();
                    let rows = self.nodes[id].shape[0];
                    let cols = self.nodes[id].shape[1];
                    let mut offset = 0;
                    for p in parts {
                        let pc = self.nodes[p].shape[1];
                        if self.nodes[p].needs_grad {
                            let gp = ensure(&mut grads[p], rows * pc);
                            for r in 0..rows {
                                for c in 0..pc {
                                    gp[r * pc + c] += gout[r * cols + offset + c];
                                }
                            }
                        }
                        offset += pc;
                    }
                }
                Op::Conv2d {
                    x,
                    weight,
                    bias,
                    dims,
                } => {
                    let (x, weight, bias, dims) = (*x, *weight, *bias, *dims);
                    let want_dx = self.nodes[x].needs_grad;
                    let (dx, dw, db) = conv2d_backward(
                        &self.nodes[x].data,
                        &self.nodes[weight].data,
                        &gout,
                        dims,
                        want_dx,
                    );
                    if let Some(dx) = dx {
                        let gx = ensure(&mut grads[x], dx.len());
                        for i in 0..dx.len() {
                            gx[i] += dx[i];
                        }
                    }
                    if self.nodes[weight].needs_grad {
                        let gw = ensure(&mut grads[weight], dw.len());
                        for i in 0..dw.len() {
                            gw[i] += dw[i];
                        }
                    }
                    if let Some(b) = bias {
                        if self.nodes[b].needs_grad {
                            let gb = ensure(&mut grads[b], db.len());
                            for i in 0..db.len() {
                                gb[i] += db[i];
                            }
                        }
                    }
                }
                Op::GroupNorm {
                    x,
                    gamma,
                    beta,
                    groups,
                    stats,
                } => {
                    let (x, gamma, beta, groups) = (*x, *gamma, *beta, *groups);
                    let shape = &self.nodes[id].shape;
                    let (b, c, spatial) = (shape[0], shape[1], shape[2] * shape[3]);
                    let mut dx = vec![0.0f32; node_len];
                    let mut dgamma = vec![0.0f32; c];
                    let mut dbeta = vec![0.0f32; c];
                    group_norm_backward(
                        &self.nodes[x].data,
                        &gout,
                        b,
                        c,
                        spatial,
                        groups,
                        &self.nodes[gamma].data,
                        stats,
                        &mut dx,
                        &mut dgamma,
                        &mut dbeta,
                    );
                    if self.nodes[x].needs_grad {
                        let gx = ensure(&mut grads[x], node_len);
                        for i in 0..node_len {
                            gx[i] += dx[i];
                        }
                    }
                    if self.nodes[gamma].needs_grad {
                        let gg = ensure(&mut grads[gamma], c);
                        for i in 0..c {
                            gg[i] += dgamma[i];
                        }
                    }
                    if self.nodes[beta].needs_grad {
                        let gb = ensure(&mut grads[beta], c);
                        for i in 0..c {
                            gb[i] += dbeta[i];
                        }
                    }
                }
                Op::Silu(x) => {
                    let x = *x;
                    if self.nodes[x].needs_grad {
                        let vx = self.nodes[x].data.clone();
                        let gx = ensure(&mut grads[x], node_len);
                        silu_backward(&vx, &gout, gx);
                    }
                }
                Op::Film { x, gb } => {
                    let (x, gb) = (*x, *gb);
                    let shape = self.nodes[id].shape.clone();
                    let (b, c, spatial) = (shape[0], shape[1], shape[2] * shape[3]);
                    let mut dx = vec![0.0f32; node_len];
                    let mut dgb = vec![0.0f32; b * 2 * c];
                    film_backward(
                        &self.nodes[x].data,
                        &self.nodes[gb].data,
                        &gout,
                        b,
                        c,
                        spatial,
                        &mut dx,
                        &mut dgb,
                    );
                    if self.nodes[x].needs_grad {
                        let gx = ensure(&mut grads[x], node_len);
                        for i in 0..node_len {
                            gx[i] += dx[i];
                        }
                    }
                    if self.nodes[gb].needs_grad {
                        let gg = ensure(&mut grads[gb], dgb.len());
                        for i in 0..dgb.len() {
                            gg[i] += dgb[i];
                        }
                    }
                }
                Op::SoftmaxGrid(x) => {
                    let x = *x;
                    if self.nodes[x].needs_grad {
                        let y = self.nodes[id].data.clone();
                        let batch = self.nodes[id].shape[0];
                        let gx = ensure(&mut grads[x], node_len);
                        softmax_grid_backward(&y, &gout, batch, gx);
                    }
                }
                Op::SumAll(x) => {
                    let x = *x;
                    if self.nodes[x].needs_grad {
                        let len = self.nodes[x].data.len();
                        let gx = ensure(&mut grads[x], len);
                        for v in gx.iter_mut() {
                            *v += gout[0];
                        }
                    }
                }
                Op::KlLoss { pred, target } => {
                    let (pred, target) = (*pred, target.clone());
                    if self.nodes[pred].needs_grad {
                        let p = self.nodes[pred].data.clone();
                        let batch = self.nodes[pred].shape[0];
                        let gx = ensure(&mut grads[pred], p.len());
                        losses::kl_backward(&p, &target, batch, gout[0], gx);
                    }
                }
                Op::JsdLoss { pred, target } => {
                    let (pred, target) = (*pred, target.clone());
                    if self.nodes[pred].needs_grad {
                        let p = self.nodes[pred].data.clone();
                        let batch = self.nodes[pred].shape[0];
                        let gx = ensure(&mut grads[pred], p.len());
                        losses::jsd_backward(&p, &target, batch, gout[0], gx);
                    }
                }
                Op::MseLoss { pred, target } => {
                    let (pred, target) = (*pred, target.clone());
                    if self.nodes[pred].needs_grad {
                        let p = self.nodes[pred].data.clone();
                        let batch = self.nodes[pred].shape[0];
                        let gx = ensure(&mut grads[pred], p.len());
                        losses::mse_backward(&p, &target, batch, gout[0], gx);
                    }
                }
                Op::WemdLoss {
                    pred,
                    target,
                    rows,
                    cols,
                } => {
                    let (pred, target, rows, cols) = (*pred, target.clone(), *rows, *cols);
                    if self.nodes[pred].needs_grad {
                        let p = self.nodes[pred].data.clone();
                        let batch = self.nodes[pred].shape[0];
                        let gx = ensure(&mut grads[pred], p.len());
                        losses::wemd_backward(&p, &target, batch, rows, cols, gout[0], gx);
                    }
                }
                Op::OamLoss {
                    pred,
                    ell_p,
                    rows,
                    cols,
                } => {
                    let (pred, ell_p, rows, cols) = (*pred, ell_p.clone(), *rows, *cols);
                    if self.nodes[pred].needs_grad {
                        let p = self.nodes[pred].data.clone();
                        let batch = self.nodes[pred].shape[0];
                        let gx = ensure(&mut grads[pred], p.len());
                        losses::oam_backward(&p, &ell_p, batch, rows, cols, gout[0], gx);
                    }
                }
                Op::WeightedSum { terms, weights } => {
                    let pairs: Vec<(TensorId, f64)> =
                        terms.iter().cloned().zip(weights.iter().cloned()).collect();
                    for (t, w) in pairs {
                        if self.nodes[t].needs_grad {
                            let gt = ensure(&mut grads[t], 1);
                            gt[0] += gout[0] * w as f32;
                        }
                    }
                }
            }
            grads[id] = Some(gout);
        }

        Ok(Grads { grads })
    }
}
