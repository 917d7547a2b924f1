//! Collinear phase-matching angle solver.

use crate::args::CrystalArgs;
use crate::context::{CliResult, Ctx};
use clap::Args;
use spdc_optics::{collinear_delta_k, find_phase_matching_angle, PhysicalParams};

#[derive(Args, Debug)]
pub struct PhaseMatchCmd {
    /// Pump wavelength in micrometers
    #[arg(long, default_value_t = 0.355)]
    pub lambda_p: f64,
    /// Signal wavelength in micrometers (defaults to 2 x pump)
    #[arg(long)]
    pub lambda_s: Option<f64>,
    #[command(flatten)]
    pub crystal: CrystalArgs,
}

pub fn run(ctx: &Ctx, cmd: &PhaseMatchCmd) -> CliResult<()> {
    let crystal = cmd.crystal.to_spec()?;
    let mut params = PhysicalParams::new(0.0, 33.0, 1000.0, 200.0, 0, 0);
    params.lambda_p_um = cmd.lambda_p;
    params.lambda_s_um = cmd.lambda_s.unwrap_or(2.0 * cmd.lambda_p);
    let theta = find_phase_matching_angle(&params, &crystal)?;
    let residual = collinear_delta_k(theta, &params, &crystal)?;
    println!(
        "phase-matching angle theta* = {theta:.6} deg (collinear residual dk = {residual:.3e} rad/um)"
    );
    ctx.emit_manifest("phase-match", &[])?;
    Ok(())
}
