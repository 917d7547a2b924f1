//! Labeled dataset generation.

use crate::args::{parse_int_set, CrystalArgs, GridArgs};
use crate::context::{CliError, CliResult, Ctx};
use clap::Args;
use spdc_dataset::{generate_dataset, save_dataset, ParamRanges};

#[derive(Args, Debug)]
pub struct GenDatasetCmd {
    /// Number of records
    #[arg(long, default_value_t = 2500)]
    pub count: usize,
    /// Output file name under the output directory
    #[arg(long, default_value = "dataset.oamd")]
    pub out: String,
    #[arg(long, default_value_t = 0.02)]
    pub g_min: f64,
    #[arg(long, default_value_t = 5.4)]
    pub g_max: f64,
    #[arg(long, default_value_t = 32.9)]
    pub theta_min: f64,
    #[arg(long, default_value_t = 33.0)]
    pub theta_max: f64,
    #[arg(long, default_value_t = 850.0)]
    pub l_min: f64,
    #[arg(long, default_value_t = 3500.0)]
    pub l_max: f64,
    #[arg(long, default_value_t = 130.0)]
    pub wp_min: f64,
    #[arg(long, default_value_t = 670.0)]
    pub wp_max: f64,
    /// Pump OAM candidates, e.g. "-2..4" or "-2,0,3"
    #[arg(long, default_value = "-2..4", allow_hyphen_values = true)]
    pub ellp_set: String,
    /// Pump radial-index candidates
    #[arg(long, default_value = "0..4")]
    pub pp_set: String,
    /// Guarantee every (ell_p, p_p) cell appears
    #[arg(long)]
    pub stratified: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub crystal: CrystalArgs,
}

pub fn run(ctx: &Ctx, cmd: &GenDatasetCmd) -> CliResult<()> {
    let ranges = ParamRanges {
        g: [cmd.g_min, cmd.g_max],
        theta_deg: [cmd.theta_min, cmd.theta_max],
        l_um: [cmd.l_min, cmd.l_max],
        w_p_um: [cmd.wp_min, cmd.wp_max],
        ell_p: parse_int_set(&cmd.ellp_set)?
            .into_iter()
            .map(|v| v as i32)
            .collect(),
        p_p: parse_int_set(&cmd.pp_set)?
            .into_iter()
            .map(|v| {
                if v < 0 {
                    Err(CliError::Invalid(format!("p_p must be >= 0, got {v}")))
                } else {
                    Ok(v as u32)
                }
            })
            .collect::<CliResult<Vec<u32>>>()?,
    };
    let gen = cmd.grid.gen_config();
    let crystal = cmd.crystal.to_spec()?;
    let ds = generate_dataset(&ranges, cmd.count, &gen, &crystal, ctx.seed, cmd.stratified)?;
    let path = ctx.out_path(&cmd.out);
    save_dataset(&ds, &path)?;
    println!(
        "wrote {} records to {} (resampled {})",
        ds.len(),
        path.display(),
        ds.header.resampled
    );
    ctx.emit_manifest("gen-dataset", &[("dataset", ds.header.provenance.clone())])?;
    Ok(())
}
