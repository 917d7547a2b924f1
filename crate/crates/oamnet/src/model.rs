//! Network assembly: conditioning MLP, input convolution block, FiLM
//! residual stack with increasing dilations, and the softmax head.

use crate::condition::{ell_index, pp_index};
use crate::{ModelConfig, OamnetError, Result};
use spdc_nn::{init, Graph, ParamStore, TensorId};

/// Parameter slot layout of one FiLM residual block.
#[derive(Debug, Clone, Copy)]
struct BlockSlots {
    conv1_w: usize,
    conv1_b: usize,
    gn1_gamma: usize,
    gn1_beta: usize,
    film1_w: Option<usize>,
    film1_b: Option<usize>,
    conv2_w: usize,
    conv2_b: usize,
    gn2_gamma: usize,
    gn2_beta: usize,
    film2_w: Option<usize>,
    film2_b: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Slots {
    embed_ell: Option<usize>,
    embed_pp: Option<usize>,
    cond_w1: Option<usize>,
    cond_b1: Option<usize>,
    cond_w2: Option<usize>,
    cond_b2: Option<usize>,
    stem_w: usize,
    stem_b: usize,
    stem_gamma: usize,
    stem_beta: usize,
    head_w: usize,
    head_b: usize,
}

/// The surrogate model: configuration plus parameter store.
pub struct OamNet {
    pub cfg: ModelConfig,
    pub store: ParamStore,
    slots: Slots,
    blocks: Vec<BlockSlots>,
    /// Constant coordinate feature map for one sample, [2, H, W].
    coords: Vec<f32>,
}

/// One forward batch: standardized continuous features and discrete indices.
pub struct CondBatch {
    pub cont: Vec<f32>,    // [B, 4]
    pub ell_idx: Vec<usize>, // [B]
    pub pp_idx: Vec<usize>,  // [B]
    pub batch: usize,
}

impl OamNet {
    pub fn new(cfg: ModelConfig, seed: u64) -> Self {
        let mut store = ParamStore::default();
        let c = cfg.channels;
        let k = cfg.kernel;
        let d = cfg.cond_hidden;
        let e = cfg.embed_dim;
        let mut rng = init::seeded_rng(seed, 0x6f616d);

        let (embed_ell, embed_pp, cond_w1, cond_b1, cond_w2, cond_b2) = if cfg.film {
            let embed_ell = store.add(
                "embed.ell",
                &[cfg.ell_vocab(), e],
                init::normal(&mut rng, cfg.ell_vocab() * e, 0.02),
            );
            let embed_pp = store.add(
                "embed.pp",
                &[cfg.pp_vocab(), e],
                init::normal(&mut rng, cfg.pp_vocab() * e, 0.02),
            );
            let cl = cfg.cond_len();
            let cond_w1 = store.add(
                "cond.w1",
                &[cl, d],
                init::kaiming_uniform(&mut rng, cl * d, cl),
            );
            let cond_b1 = store.add("cond.b1", &[d], init::zeros(d));
            let cond_w2 = store.add(
                "cond.w2",
                &[d, d],
                init::kaiming_uniform(&mut rng, d * d, d),
            );
            let cond_b2 = store.add("cond.b2", &[d], init::zeros(d));
            (
                Some(embed_ell),
                Some(embed_pp),
                Some(cond_w1),
                Some(cond_b1),
                Some(cond_w2),
                Some(cond_b2),
            )
        } else {
            (None, None, None, None, None, None)
        };

        let stem_w = store.add(
            "stem.conv.w",
            &[c, 2, k, k],
            init::kaiming_uniform(&mut rng, c * 2 * k * k, 2 * k * k),
        );
        let stem_b = store.add("stem.conv.b", &[c], init::zeros(c));
        let stem_gamma = store.add("stem.gn.gamma", &[c], init::ones(c));
        let stem_beta = store.add("stem.gn.beta", &[c], init::zeros(c));

        let mut blocks = Vec::new();
        for (i, _) in cfg.dilations.iter().enumerate() {
            let fan = c * k * k;
            let conv1_w = store.add(
                format!("block{i}.conv1.w"),
                &[c, c, k, k],
                init::kaiming_uniform(&mut rng, c * c * k * k, fan),
            );
            let conv1_b = store.add(format!("block{i}.conv1.b"), &[c], init::zeros(c));
            let gn1_gamma = store.add(format!("block{i}.gn1.gamma"), &[c], init::ones(c));
            let gn1_beta = store.add(format!("block{i}.gn1.beta"), &[c], init::zeros(c));
            let (film1_w, film1_b) = if cfg.film {
                // zero-initialized head: training starts at the unmodulated
                // network
                (
                    Some(store.add(format!("block{i}.film1.w"), &[d, 2 * c], init::zeros(d * 2 * c))),
                    Some(store.add(format!("block{i}.film1.b"), &[2 * c], init::zeros(2 * c))),
                )
            } else {
                (None, None)
            };
            let conv2_w = store.add(
                format!("block{i}.conv2.w"),
                &[c, c, k, k],
                init::kaiming_uniform(&mut rng, c * c * k * k, fan),
            );
            let conv2_b = store.add(format!("block{i}.conv2.b"), &[c], init::zeros(c));
            let gn2_gamma = store.add(format!("block{i}.gn2.gamma"), &[c], init::ones(c));
            let gn2_beta = store.add(format!("block{i}.gn2.beta"), &[c], init::zeros(c));
            let (film2_w, film2_b) = if cfg.film {
                (
                    Some(store.add(format!("block{i}.film2.w"), &[d, 2 * c], init::zeros(d * 2 * c))),
                    Some(store.add(format!("block{i}.film2.b"), &[2 * c], init::zeros(2 * c))),
                )
            } else {
                (None, None)
            };
            blocks.push(BlockSlots {
                conv1_w,
                conv1_b,
                gn1_gamma,
                gn1_beta,
                film1_w,
                film1_b,
                conv2_w,
                conv2_b,
                gn2_gamma,
                gn2_beta,
                film2_w,
                film2_b,
            });
        }

        // final 1x1 projection at reduced scale so the initial output stays
        // near uniform
        let head_raw = init::kaiming_uniform(&mut rng, c, c);
        let head_w_data: Vec<f32> = head_raw.iter().map(|v| v * 0.05).collect();
        let head_w = store.add("head.w", &[1, c, 1, 1], head_w_data);
        let head_b = store.add("head.b", &[1], init::zeros(1));

        let coords = coordinate_channels(cfg.m_modes, cfg.ell_bins());

        OamNet {
            cfg,
            store,
            slots: Slots {
                embed_ell,
                embed_pp,
                cond_w1,
                cond_b1,
                cond_w2,
                cond_b2,
                stem_w,
                stem_b,
                stem_gamma,
                stem_beta,
                head_w,
                head_b,
            },
            blocks,
            coords,
        }
    }

    pub fn param_count(&self) -> usize {
        self.store.total_len()
    }

    /// Builds the discrete-index batch from raw parameter values.
    pub fn cond_batch(
        &self,
        cont: Vec<f32>,
        ell_p: &[i32],
        p_p: &[u32],
    ) -> Result<CondBatch> {
        let batch = ell_p.len();
        let mut ell_idx = Vec::with_capacity(batch);
        let mut pp_idx = Vec::with_capacity(batch);
        for (&e, &p) in ell_p.iter().zip(p_p) {
            ell_idx.push(ell_index(e, &self.cfg)?);
            pp_idx.push(pp_index(p, &self.cfg)?);
        }
        Ok(CondBatch {
            cont,
            ell_idx,
            pp_idx,
            batch,
        })
    }

    /// Registers parameters and runs the forward pass; returns the
    /// slot-aligned leaf ids and the prediction node [B, 1, H, W]
    /// (softmax-normalized per sample).
    pub fn forward(&self, g: &mut Graph, batch: &CondBatch) -> Result<(Vec<TensorId>, TensorId)> {
        let ids = self.store.register_all(g)?;
        let pred = self.forward_with_ids(g, &ids, batch)?;
        Ok((ids, pred))
    }

    fn forward_with_ids(
        &self,
        g: &mut Graph,
        ids: &[TensorId],
        batch: &CondBatch,
    ) -> Result<TensorId> {
        let cfg = &self.cfg;
        let b = batch.batch;
        let (h, w) = (cfg.m_modes, cfg.ell_bins());

        // conditioning features
        let cond = if cfg.film {
            let cont = g.input(&[b, 4], batch.cont.clone())?;
            let e_ell = g.embedding(ids[self.slots.embed_ell.unwrap()], &batch.ell_idx)?;
            let e_pp = g.embedding(ids[self.slots.embed_pp.unwrap()], &batch.pp_idx)?;
            let c = g.concat(&[cont, e_ell, e_pp])?;
            let h1 = g.linear(
                c,
                ids[self.slots.cond_w1.unwrap()],
                ids[self.slots.cond_b1.unwrap()],
            )?;
            let h1 = g.silu(h1)?;
            let h2 = g.linear(
                h1,
                ids[self.slots.cond_w2.unwrap()],
                ids[self.slots.cond_b2.unwrap()],
            )?;
            Some(g.silu(h2)?)
        } else {
            None
        };

        // physics-informed coordinate channels tiled over the batch
        let mut coord_data = Vec::with_capacity(b * self.coords.len());
        for _ in 0..b {
            coord_data.extend_from_slice(&self.coords);
        }
        let x = g.input(&[b, 2, h, w], coord_data)?;

        // input convolution block
        let y = g.conv2d(x, ids[self.slots.stem_w], Some(ids[self.slots.stem_b]), 1)?;
        let y = g.group_norm(
            y,
            ids[self.slots.stem_gamma],
            ids[self.slots.stem_beta],
            cfg.groups,
            1e-5,
        )?;
        let mut state = g.silu(y)?;

        for (block, &dilation) in self.blocks.iter().zip(&cfg.dilations) {
            state = self.resblock(g, ids, state, cond, block, dilation)?;
        }

        let logits = g.conv2d(state, ids[self.slots.head_w], Some(ids[self.slots.head_b]), 1)?;
        Ok(g.softmax_grid(logits)?)
    }

    fn resblock(
        &self,
        g: &mut Graph,
        ids: &[TensorId],
        input: TensorId,
        cond: Option<TensorId>,
        slots: &BlockSlots,
        dilation: usize,
    ) -> Result<TensorId> {
        let cfg = &self.cfg;
        let mut t = g.conv2d(input, ids[slots.conv1_w], Some(ids[slots.conv1_b]), dilation)?;
        t = g.group_norm(
            t,
            ids[slots.gn1_gamma],
            ids[slots.gn1_beta],
            cfg.groups,
            1e-5,
        )?;
        if let (Some(cond), Some(fw), Some(fb)) = (cond, slots.film1_w, slots.film1_b) {
            let gb = g.linear(cond, ids[fw], ids[fb])?;
            t = g.film(t, gb)?;
        }
        t = g.silu(t)?;
        t = g.conv2d(t, ids[slots.conv2_w], Some(ids[slots.conv2_b]), dilation)?;
        t = g.group_norm(
            t,
            ids[slots.gn2_gamma],
            ids[slots.gn2_beta],
            cfg.groups,
            1e-5,
        )?;
        if let (Some(cond), Some(fw), Some(fb)) = (cond, slots.film2_w, slots.film2_b) {
            let gb = g.linear(cond, ids[fw], ids[fb])?;
            t = g.film(t, gb)?;
        }
        let sum = g.add(t, input)?;
        Ok(g.silu(sum)?)
    }

    /// Zeroes the FiLM heads, restoring the unmodulated network.
    pub fn zero_film_heads(&mut self) {
        let names: Vec<usize> = self
            .store
            .params
            .iter()
            .enumerate()
            .filter(|(_, p)| p.name.contains(".film"))
            .map(|(i, _)| i)
            .collect();
        for i in names {
            self.store.params[i].data.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Looks up a parameter slot by name.
    pub fn slot_by_name(&self, name: &str) -> Option<usize> {
        self.store.params.iter().position(|p| p.name == name)
    }
}

/// Two coordinate channels over the output grid: the normalized radial index
/// and the normalized OAM index, each spanning [-1, 1].
fn coordinate_channels(m_modes: usize, ell_bins: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(2 * m_modes * ell_bins);
    for mi in 0..m_modes {
        let mv = if m_modes > 1 {
            2.0 * mi as f32 / (m_modes - 1) as f32 - 1.0
        } else {
            0.0
        };
        for _ in 0..ell_bins {
            out.push(mv);
        }
    }
    for _ in 0..m_modes {
        for li in 0..ell_bins {
            let lv = if ell_bins > 1 {
                2.0 * li as f32 / (ell_bins - 1) as f32 - 1.0
            } else {
                0.0
            };
            out.push(lv);
        }
    }
    out
}

impl std::fmt::Debug for OamNet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OamNet")
            .field("cfg", &self.cfg)
            .field("params", &self.param_count())
            .finish()
    }
}

pub(crate) fn out_of_vocab(what: &str, value: i64, max: i64) -> OamnetError {
    OamnetError::OutOfVocab(format!("{what} = {value} outside [{}, {max}]", -max))
}
