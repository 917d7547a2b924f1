//! Dynamic tape: builders execute forward eagerly and record the op context
//! needed by `backward`.

use crate::conv::{conv2d_forward, ConvDims};
use crate::kernels::{
    film_forward, group_norm_forward, silu_forward, softmax_grid_forward, GnStats,
};
use crate::{losses, NnError, Result};
use std::sync::Arc;

pub type TensorId = usize;

pub(crate) enum Op {
    Leaf,
    Add(TensorId, TensorId),
    Sub(TensorId, TensorId),
    Mul(TensorId, TensorId),
    Scale(TensorId, f32),
    /// [m,k] . [k,n] row-major.
    Matmul {
        a: TensorId,
        b: TensorId,
    },
    /// [r,c] plus a length-c bias row.
    BiasAdd {
        x: TensorId,
        bias: TensorId,
    },
    Embedding {
        table: TensorId,
        indices: Arc<Vec<usize>>,
    },
    /// 2-D concat along the feature axis.
    Concat {
        parts: Vec<TensorId>,
    },
    Conv2d {
        x: TensorId,
        weight: TensorId,
        bias: Option<TensorId>,
        dims: ConvDims,
    },
    GroupNorm {
        x: TensorId,
        gamma: TensorId,
        beta: TensorId,
        groups: usize,
        stats: GnStats,
    },
    Silu(TensorId),
    Film {
        x: TensorId,
        gb: TensorId,
    },
    SoftmaxGrid(TensorId),
    SumAll(TensorId),
    KlLoss {
        pred: TensorId,
        target: Arc<Vec<f64>>,
    },
    JsdLoss {
        pred: TensorId,
        target: Arc<Vec<f64>>,
    },
    MseLoss {
        pred: TensorId,
        target: Arc<Vec<f64>>,
    },
    WemdLoss {
        pred: TensorId,
        target: Arc<Vec<f64>>,
        rows: usize,
        cols: usize,
    },
    OamLoss {
        pred: TensorId,
        ell_p: Arc<Vec<i32>>,
        rows: usize,
        cols: usize,
    },
    WeightedSum {
        terms: Vec<TensorId>,
        weights: Vec<f64>,
    },
}

pub(crate) struct Node {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
    pub op: Op,
    pub needs_grad: bool,
    /// Exact f64 value for scalar loss nodes.
    pub aux_f64: Option<f64>,
}

/// A single-use forward tape.
pub struct Graph {
    pub(crate) nodes: Vec<Node>,
    checked: bool,
    pub(crate) backward_done: bool,
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Graph {
    /// `checked` scans every op output for non-finite values.
    pub fn new(checked: bool) -> Self {
        Graph {
            nodes: Vec::new(),
            checked,
            backward_done: false,
        }
    }

    pub fn shape(&self, id: TensorId) -> &[usize] {
        &self.nodes[id].shape
    }

    pub fn data(&self, id: TensorId) -> &[f32] {
        &self.nodes[id].data
    }

    /// Exact f64 value of a scalar loss node, falling back to the f32 data.
    pub fn value_f64(&self, id: TensorId) -> f64 {
        self.nodes[id]
            .aux_f64
            .unwrap_or_else(|| self.nodes[id].data[0] as f64)
    }

    fn push(
        &mut self,
        op: &'static str,
        shape: Vec<usize>,
        data: Vec<f32>,
        op_rec: Op,
        needs_grad: bool,
        aux_f64: Option<f64>,
    ) -> Result<TensorId> {
        debug_assert_eq!(numel(&shape), data.len());
        if self.checked && !data.iter().all(|v| v.is_finite()) {
            return Err(NnError::NonFinite { op });
        }
        self.nodes.push(Node {
            shape,
            data,
            op: op_rec,
            needs_grad,
            aux_f64,
        });
        Ok(self.nodes.len() - 1)
    }

    fn needs(&self, id: TensorId) -> bool {
        self.nodes[id].needs_grad
    }

    /// Constant input (no gradient).
    pub fn input(&mut self, shape: &[usize], data: Vec<f32>) -> Result<TensorId> {
        self.push(
            "input",
            shape.to_vec(),
            data,
            Op::Leaf,
            false,
            None,
        )
    }

    /// Trainable leaf bound to a parameter-store slot.
    pub fn param(&mut self, _slot: usize, shape: &[usize], data: Vec<f32>) -> Result<TensorId> {
        self.push(
            "param",
            shape.to_vec(),
            data,
            Op::Leaf,
            true,
            None,
        )
    }

    fn same_shape(&self, op: &'static str, a: TensorId, b: TensorId) -> Result<()> {
        if self.nodes[a].shape != self.nodes[b].shape {
            return Err(NnError::ShapeMismatch {
                op,
                detail: format!("{:?} vs {:?}", self.nodes[a].shape, self.nodes[b].shape),
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.same_shape("add", a, b)?;
        let data = self.nodes[a]
            .data
            .iter()
            .zip(&self.nodes[b].data)
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.nodes[a].shape.clone();
        let ng = self.needs(a) || self.needs(b);
        self.push("add", shape, data, Op::Add(a, b), ng, None)
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.same_shape("sub", a, b)?;
        let data = self.nodes[a]
            .data
            .iter()
            .zip(&self.nodes[b].data)
            .map(|(x, y)| x - y)
            .collect();
        let shape = self.nodes[a].shape.clone();
        let ng = self.needs(a) || self.needs(b);
        self.push("sub", shape, data, Op::Sub(a, b), ng, None)
    }

    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.same_shape("mul", a, b)?;
        let data = self.nodes[a]
            .data
            .iter()
            .zip(&self.nodes[b].data)
            .map(|(x, y)| x * y)
            .collect();
        let shape = self.nodes[a].shape.clone();
        let ng = self.needs(a) || self.needs(b);
        self.push("mul", shape, data, Op::Mul(a, b), ng, None)
    }

    pub fn scale(&mut self, a: TensorId, factor: f32) -> Result<TensorId> {
        let data = self.nodes[a].data.iter().map(|x| x * factor).collect();
        let shape = self.nodes[a].shape.clone();
        let ng = self.needs(a);
        self.push("scale", shape, data, Op::Scale(a, factor), ng, None)
    }

    /// Row-major [m,k] . [k,n].
    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (sa, sb) = (&self.nodes[a].shape, &self.nodes[b].shape);
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(NnError::ShapeMismatch {
                op: "matmul",
                detail: format!("{sa:?} x {sb:?}"),
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut data = vec![0.0f32; m * n];
        crate::gemm::matmul(m, k, n, &self.nodes[a].data, &self.nodes[b].data, &mut data);
        let ng = self.needs(a) || self.needs(b);
        self.push("matmul", vec![m, n], data, Op::Matmul { a, b }, ng, None)
    }

    /// Adds a length-c bias to every row of a 2-D tensor.
    pub fn bias_add(&mut self, x: TensorId, bias: TensorId) -> Result<TensorId> {
        let (sx, sb) = (&self.nodes[x].shape, &self.nodes[bias].shape);
        if sx.len() != 2 || sb.len() != 1 || sx[1] != sb[0] {
            return Err(NnError::ShapeMismatch {
                op: "bias_add",
                detail: format!("{sx:?} + {sb:?}"),
            });
        }
        let (r, c) = (sx[0], sx[1]);
        let mut data = self.nodes[x].data.clone();
        for row in 0..r {
            for col in 0..c {
                data[row * c + col] += self.nodes[bias].data[col];
            }
        }
        let ng = self.needs(x) || self.needs(bias);
        self.push("bias_add", vec![r, c], data, Op::BiasAdd { x, bias }, ng, None)
    }

    /// Dense layer x[B,in] . w[in,out] + b[out].
    pub fn linear(&mut self, x: TensorId, w: TensorId, b: TensorId) -> Result<TensorId> {
        let y = self.matmul(x, w)?;
        self.bias_add(y, b)
    }

    /// Row lookup: out[i, :] = table[indices[i], :].
    pub fn embedding(&mut self, table: TensorId, indices: &[usize]) -> Result<TensorId> {
        let st = &self.nodes[table].shape;
        if st.len() != 2 {
            return Err(NnError::ShapeMismatch {
                op: "embedding",
                detail: format!("table must be 2-D, got {st:?}"),
            });
        }
        let (vocab, dim) = (st[0], st[1]);
        let mut data = Vec::with_capacity(indices.len() * dim);
        for &idx in indices {
            if idx >= vocab {
                return Err(NnError::OutOfVocab { index: idx, vocab });
            }
            data.extend_from_slice(&self.nodes[table].data[idx * dim..(idx + 1) * dim]);
        }
        let ng = self.needs(table);
        self.push(
            "embedding",
            vec![indices.len(), dim],
            data,
            Op::Embedding {
                table,
                indices: Arc::new(indices.to_vec()),
            },
            ng,
            None,
        )
    }

    /// Concatenates 2-D tensors along the feature axis.
    pub fn concat(&mut self, parts: &[TensorId]) -> Result<TensorId> {
        if parts.is_empty() {
            return Err(NnError::ShapeMismatch {
                op: "concat",
                detail: "no parts".into(),
            });
        }
        let rows = self.nodes[parts[0]].shape[0];
        let mut cols = 0;
        for &p in parts {
            let s = &self.nodes[p].shape;
            if s.len() != 2 || s[0] != rows {
                return Err(NnError::ShapeMismatch {
                    op: "concat",
                    detail: format!("part shape {s:?}, expected [{rows}, _]"),
                });
            }
            cols += s[1];
        }
        let mut data = vec![0.0f32; rows * cols];
        let mut offset = 0;
        for &p in parts {
            let pc = self.nodes[p].shape[1];
            for r in 0..rows {
                data[r * cols + offset..r * cols + offset + pc]
                    .copy_from_slice(&self.nodes[p].data[r * pc..(r + 1) * pc]);
            }
            offset += pc;
        }
        let ng = parts.iter().any(|&p| self.needs(p));
        self.push(
            "concat",
            vec![rows, cols],
            data,
            Op::Concat {
                parts: parts.to_vec(),
            },
            ng,
            None,
        )
    }

    /// Dilated same-padding cross-correlation; x [B,C,H,W], w [C',C,k,k].
    pub fn conv2d(
        &mut self,
        x: TensorId,
        weight: TensorId,
        bias: Option<TensorId>,
        dilation: usize,
    ) -> Result<TensorId> {
        let sx = &self.nodes[x].shape;
        let sw = &self.nodes[weight].shape;
        if sx.len() != 4 || sw.len() != 4 || sx[1] != sw[1] || sw[2] != sw[3] {
            return Err(NnError::ShapeMismatch {
                op: "conv2d",
                detail: format!("x {sx:?}, w {sw:?}"),
            });
        }
        if sw[2] % 2 == 0 {
            return Err(NnError::EvenKernel {
                op: "conv2d",
                k: sw[2],
            });
        }
        if let Some(b) = bias {
            let sb = &self.nodes[b].shape;
            if sb.len() != 1 || sb[0] != sw[0] {
                return Err(NnError::ShapeMismatch {
                    op: "conv2d",
                    detail: format!("bias {sb:?} vs out channels {}", sw[0]),
                });
            }
        }
        let dims = ConvDims {
            batch: sx[0],
            c_in: sx[1],
            c_out: sw[0],
            h: sx[2],
            w: sx[3],
            k: sw[2],
            dilation: dilation.max(1),
        };
        let data = conv2d_forward(
            &self.nodes[x].data,
            &self.nodes[weight].data,
            bias.map(|b| self.nodes[b].data.as_slice()),
            dims,
        );
        let shape = vec![dims.batch, dims.c_out, dims.h, dims.w];
        let ng = self.needs(x)
            || self.needs(weight)
            || bias.map(|b| self.needs(b)).unwrap_or(false);
        self.push(
            "conv2d",
            shape,
            data,
            Op::Conv2d {
                x,
                weight,
                bias,
                dims,
            },
            ng,
            None,
        )
    }

    /// GroupNorm over (channels/groups, H, W) blocks with per-channel affine.
    pub fn group_norm(
        &mut self,
        x: TensorId,
        gamma: TensorId,
        beta: TensorId,
        groups: usize,
        eps: f32,
    ) -> Result<TensorId> {
        let sx = self.nodes[x].shape.clone();
        if sx.len() != 4 {
            return Err(NnError::ShapeMismatch {
                op: "group_norm",
                detail: format!("x must be 4-D, got {sx:?}"),
            });
        }
        let channels = sx[1];
        if groups == 0 || channels % groups != 0 {
            return Err(NnError::BadGroups { channels, groups });
        }
        for (name, t) in [("gamma", gamma), ("beta", beta)] {
            let s = &self.nodes[t].shape;
            if s.as_slice() != [channels] {
                return Err(NnError::ShapeMismatch {
                    op: "group_norm",
                    detail: format!("{name} {s:?} vs channels {channels}"),
                });
            }
        }
        let spatial = sx[2] * sx[3];
        let (data, stats) = group_norm_forward(
            &self.nodes[x].data,
            sx[0],
            channels,
            spatial,
            groups,
            &self.nodes[gamma].data,
            &self.nodes[beta].data,
            eps,
        );
        let ng = self.needs(x) || self.needs(gamma) || self.needs(beta);
        self.push(
            "group_norm",
            sx,
            data,
            Op::GroupNorm {
                x,
                gamma,
                beta,
                groups,
                stats,
            },
            ng,
            None,
        )
    }

    pub fn silu(&mut self, x: TensorId) -> Result<TensorId> {
        let data = silu_forward(&self.nodes[x].data);
        let shape = self.nodes[x].shape.clone();
        let ng = self.needs(x);
        self.push("silu", shape, data, Op::Silu(x), ng, None)
    }

    /// Per-channel affine modulation: x[b,c,:,:] * (1 + gamma[b,c]) + beta[b,c]
    /// with gb = [B, 2C] packing (gamma, beta).
    pub fn film(&mut self, x: TensorId, gb: TensorId) -> Result<TensorId> {
        let sx = self.nodes[x].shape.clone();
        let sg = &self.nodes[gb].shape;
        if sx.len() != 4 || sg.len() != 2 || sg[0] != sx[0] || sg[1] != 2 * sx[1] {
            return Err(NnError::ShapeMismatch {
                op: "film",
                detail: format!("x {sx:?}, gb {sg:?}"),
            });
        }
        let spatial = sx[2] * sx[3];
        let data = film_forward(
            &self.nodes[x].data,
            &self.nodes[gb].data,
            sx[0],
            sx[1],
            spatial,
        );
        let ng = self.needs(x) || self.needs(gb);
        self.push("film", sx, data, Op::Film { x, gb }, ng, None)
    }

    /// Softmax over all non-batch cells; output sums to 1 per sample.
    pub fn softmax_grid(&mut self, x: TensorId) -> Result<TensorId> {
        let shape = self.nodes[x].shape.clone();
        if shape.is_empty() {
            return Err(NnError::ShapeMismatch {
                op: "softmax_grid",
                detail: "scalar input".into(),
            });
        }
        let data = softmax_grid_forward(&self.nodes[x].data, shape[0]);
        let ng = self.needs(x);
        self.push("softmax_grid", shape, data, Op::SoftmaxGrid(x), ng, None)
    }

    pub fn sum_all(&mut self, x: TensorId) -> Result<TensorId> {
        let total: f64 = self.nodes[x].data.iter().map(|&v| v as f64).sum();
        let ng = self.needs(x);
        self.push(
            "sum_all",
            vec![1],
            vec![total as f32],
            Op::SumAll(x),
            ng,
            Some(total),
        )
    }

    fn loss_shapes(&self, op: &'static str, pred: TensorId, target_len: usize) -> Result<usize> {
        let shape = &self.nodes[pred].shape;
        let n = numel(shape);
        if n != target_len || shape.is_empty() || n % shape[0] != 0 {
            return Err(NnError::ShapeMismatch {
                op,
                detail: format!("pred {shape:?} vs target length {target_len}"),
            });
        }
        Ok(shape[0])
    }

    /// Batch-mean KL(target || pred), the loss-direction convention.
    pub fn kl_loss(&mut self, pred: TensorId, target: Arc<Vec<f64>>) -> Result<TensorId> {
        let batch = self.loss_shapes("kl_loss", pred, target.len())?;
        let v = losses::kl_forward(&self.nodes[pred].data, &target, batch)?;
        let ng = self.needs(pred);
        self.push(
            "kl_loss",
            vec![1],
            vec![v as f32],
            Op::KlLoss { pred, target },
            ng,
            Some(v),
        )
    }

    pub fn jsd_loss(&mut self, pred: TensorId, target: Arc<Vec<f64>>) -> Result<TensorId> {
        let batch = self.loss_shapes("jsd_loss", pred, target.len())?;
        let v = losses::jsd_forward(&self.nodes[pred].data, &target, batch)?;
        let ng = self.needs(pred);
        self.push(
            "jsd_loss",
            vec![1],
            vec![v as f32],
            Op::JsdLoss { pred, target },
            ng,
            Some(v),
        )
    }

    pub fn mse_loss(&mut self, pred: TensorId, target: Arc<Vec<f64>>) -> Result<TensorId> {
        let batch = self.loss_shapes("mse_loss", pred, target.len())?;
        let v = losses::mse_forward(&self.nodes[pred].data, &target, batch)?;
        let ng = self.needs(pred);
        self.push(
            "mse_loss",
            vec![1],
            vec![v as f32],
            Op::MseLoss { pred, target },
            ng,
            Some(v),
        )
    }

    pub fn wemd_loss(
        &mut self,
        pred: TensorId,
        target: Arc<Vec<f64>>,
        rows: usize,
        cols: usize,
    ) -> Result<TensorId> {
        let batch = self.loss_shapes("wemd_loss", pred, target.len())?;
        if batch * rows * cols != target.len() {
            return Err(NnError::ShapeMismatch {
                op: "wemd_loss",
                detail: format!("grid {rows}x{cols} vs target length {}", target.len()),
            });
        }
        let v = losses::wemd_forward(&self.nodes[pred].data, &target, batch, rows, cols)?;
        let ng = self.needs(pred);
        self.push(
            "wemd_loss",
            vec![1],
            vec![v as f32],
            Op::WemdLoss {
                pred,
                target,
                rows,
                cols,
            },
            ng,
            Some(v),
        )
    }

    /// Soft OAM-conservation penalty on the prediction's l-axis marginal.
    pub fn oam_loss(
        &mut self,
        pred: TensorId,
        ell_p: Arc<Vec<i32>>,
        rows: usize,
        cols: usize,
    ) -> Result<TensorId> {
        let shape = &self.nodes[pred].shape;
        let batch = shape[0];
        if numel(shape) != batch * rows * cols || ell_p.len() != batch || cols % 2 == 0 {
            return Err(NnError::ShapeMismatch {
                op: "oam_loss",
                detail: format!(
                    "pred {shape:?}, grid {rows}x{cols}, ell_p batch {}",
                    ell_p.len()
                ),
            });
        }
        let v = losses::oam_forward(&self.nodes[pred].data, &ell_p, batch, rows, cols);
        let ng = self.needs(pred);
        self.push(
            "oam_loss",
            vec![1],
            vec![v as f32],
            Op::OamLoss {
                pred,
                ell_p,
                rows,
                cols,
            },
            ng,
            Some(v),
        )
    }

    /// Scalar combination sum_i w_i term_i; exact in f64 on the side channel.
    pub fn weighted_sum(&mut self, terms: &[TensorId], weights: &[f64]) -> Result<TensorId> {
        if terms.len() != weights.len() || terms.is_empty() {
            return Err(NnError::ShapeMismatch {
                op: "weighted_sum",
                detail: "terms/weights length mismatch".into(),
            });
        }
        let mut acc = 0.0f64;
        for (&t, &w) in terms.iter().zip(weights) {
            if numel(&self.nodes[t].shape) != 1 {
                return Err(NnError::NonScalarLoss {
                    numel: numel(&self.nodes[t].shape),
                });
            }
            acc += w * self.value_f64(t);
        }
        let ng = terms.iter().any(|&t| self.needs(t));
        self.push(
            "weighted_sum",
            vec![1],
            vec![acc as f32],
            Op::WeightedSum {
                terms: terms.to_vec(),
                weights: weights.to_vec(),
            },
            ng,
            Some(acc),
        )
    }
}
