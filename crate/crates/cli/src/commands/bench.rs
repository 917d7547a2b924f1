//! Wall-time comparison: first-principles simulation vs model inference.

use crate::args::{CrystalArgs, GridArgs};
use crate::context::{CliResult, Ctx};
use clap::Args;
use spdc_dataset::{sample_params, ParamRanges};
use spdc_nn::Graph;
use spdc_oamnet::load_checkpoint;
use spdc_schmidt::simulate;
use std::time::Instant;

#[derive(Args, Debug)]
pub struct BenchCmd {
    /// Parameter sets to time
    #[arg(long, default_value_t = 4)]
    pub n_samples: usize,
    /// Timing repetitions
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Optional checkpoint for the inference column
    #[arg(long)]
    pub checkpoint: Option<std::path::PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub crystal: CrystalArgs,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn run(ctx: &Ctx, cmd: &BenchCmd) -> CliResult<()> {
    let crystal = cmd.crystal.to_spec()?;
    let params = sample_params(&ParamRanges::default(), ctx.seed, cmd.n_samples, false)?;

    // simulator column
    let mut sim_times = Vec::with_capacity(cmd.reps);
    for _ in 0..cmd.reps {
        let t0 = Instant::now();
        for p in &params {
            let grid = cmd.grid.grid_for(p)?;
            simulate(p, &crystal, &grid, cmd.grid.m_modes, cmd.grid.ell_max)?;
        }
        sim_times.push(t0.elapsed().as_secs_f64() / cmd.n_samples as f64);
    }
    let (sim_mean, sim_std) = mean_std(&sim_times);
    println!(
        "simulation   (N = {:>3}): {:>10.4} s/sample  (std {:.4} over {} reps)",
        cmd.grid.n_radial, sim_mean, sim_std, cmd.reps
    );

    // inference column
    let Some(ckpt_path) = &cmd.checkpoint else {
        println!("model        : no checkpoint given; ratio omitted");
        ctx.emit_manifest("bench", &[])?;
        return Ok(());
    };
    let ckpt = load_checkpoint(ckpt_path)?;
    let mut model_times = Vec::with_capacity(cmd.reps);
    for _ in 0..cmd.reps {
        let t0 = Instant::now();
        for p in &params {
            let z = ckpt
                .stats
                .standardize(p.g, p.theta_deg, p.l_um, p.w_p_um);
            let cont: Vec<f32> = z.iter().map(|&v| v as f32).collect();
            let batch = ckpt
                .model
                .cond_batch(cont, &[p.ell_p], &[p.p_p])
                .map_err(crate::context::CliError::from)?;
            let mut g = Graph::new(false);
            ckpt.model
                .forward(&mut g, &batch)
                .map_err(crate::context::CliError::from)?;
        }
        model_times.push(t0.elapsed().as_secs_f64() / cmd.n_samples as f64);
    }
    let (model_mean, model_std) = mean_std(&model_times);
    let ratio = sim_mean / model_mean;
    println!(
        "model        ({:>6} p): {:>10.4} s/sample  (std {:.4} over {} reps)",
        ckpt.model.param_count(),
        model_mean,
        model_std,
        cmd.reps
    );
    println!("speedup ratio (simulation / inference): {ratio:.1}x");
    ctx.emit_manifest("bench", &[("checkpoint", ckpt.provenance.clone())])?;
    Ok(())
}
