//! Checkpoint evaluation against simulator targets and single-shot
//! prediction.

use crate::train::PreparedData;
use crate::{Checkpoint, OamNet, OamnetError, Result};
use spdc_dataset::{Dataset, StandardizationStats};
use spdc_metrics::MetricReport;
use spdc_nn::Graph;
use spdc_optics::PhysicalParams;
use spdc_schmidt::{oam_spectrum_marginal, schmidt_number, ModalDistribution, OamSpectrum};

/// Per-sample metric reports plus their mean.
pub struct Evaluation {
    pub per_sample: Vec<MetricReport>,
    pub mean: MetricReport,
}

/// Runs the model over every record and compares against the stored targets.
pub fn evaluate(ckpt: &Checkpoint, data: &Dataset) -> Result<Evaluation> {
    let prepared = PreparedData::from_dataset(data, &ckpt.stats, &ckpt.model)?;
    let preds = predict_batchwise(&ckpt.model, &prepared)?;
    let rows = ckpt.model.cfg.m_modes;
    let cols = ckpt.model.cfg.ell_bins();
    let cells = rows * cols;
    let mut per_sample = Vec::with_capacity(prepared.count);
    for i in 0..prepared.count {
        let p = &preds[i * cells..(i + 1) * cells];
        let t = &prepared.targets[i * cells..(i + 1) * cells];
        per_sample.push(MetricReport::between(p, t, rows, cols)?);
    }
    let mean = MetricReport::mean(&per_sample).ok_or(OamnetError::EmptyData)?;
    Ok(Evaluation { per_sample, mean })
}

/// Forward passes over a prepared split; returns f64 predictions,
/// renormalized per sample.
pub fn predict_batchwise(model: &OamNet, data: &PreparedData) -> Result<Vec<f64>> {
    let cells = data.cells;
    let mut out = Vec::with_capacity(data.count * cells);
    let indices: Vec<usize> = (0..data.count).collect();
    for chunk in indices.chunks(64) {
        let mut cont = Vec::with_capacity(chunk.len() * 4);
        let mut ell = Vec::with_capacity(chunk.len());
        let mut pp = Vec::with_capacity(chunk.len());
        for &i in chunk {
            cont.extend_from_slice(&data.cont[i * 4..(i + 1) * 4]);
            ell.push(data.ell_p[i]);
            pp.push(data.p_p[i]);
        }
        let batch = model.cond_batch(cont, &ell, &pp)?;
        let mut g = Graph::new(true);
        let (_, pred) = model.forward(&mut g, &batch)?;
        let d = g.data(pred);
        for b in 0..chunk.len() {
            let slice = &d[b * cells..(b + 1) * cells];
            let sum: f64 = slice.iter().map(|&v| v as f64).sum();
            out.extend(slice.iter().map(|&v| v as f64 / sum));
        }
    }
    Ok(out)
}

/// Model prediction for one parameter set, with the derived Schmidt number
/// and OAM marginal.
pub struct Prediction {
    pub distribution: ModalDistribution,
    pub schmidt_number: f64,
    pub spectrum: OamSpectrum,
}

pub fn predict(ckpt: &Checkpoint, params: &PhysicalParams) -> Result<Prediction> {
    let stats: &StandardizationStats = &ckpt.stats;
    let z = stats.standardize(params.g, params.theta_deg, params.l_um, params.w_p_um);
    let cont: Vec<f32> = z.iter().map(|&v| v as f32).collect();
    let batch = ckpt
        .model
        .cond_batch(cont, &[params.ell_p], &[params.p_p])?;
    let mut g = Graph::new(true);
    let (_, pred) = ckpt.model.forward(&mut g, &batch)?;
    let d = g.data(pred);
    let sum: f64 = d.iter().map(|&v| v as f64).sum();
    let weights: Vec<f64> = d.iter().map(|&v| v as f64 / sum).collect();
    let distribution = ModalDistribution::from_flat(
        &weights,
        ckpt.model.cfg.m_modes,
        ckpt.model.cfg.ell_max,
        params.ell_p,
        params.g,
    )?;
    let k = schmidt_number(&distribution)?;
    let spectrum = oam_spectrum_marginal(&distribution)?;
    Ok(Prediction {
        distribution,
        schmidt_number: k,
        spectrum,
    })
}
