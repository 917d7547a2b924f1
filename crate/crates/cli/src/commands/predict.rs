//! Single-configuration inference from a trained checkpoint.

use crate::args::ParamArgs;
use crate::context::{CliResult, Ctx};
use clap::Args;
use spdc_oamnet::{eval::predict, load_checkpoint};

#[derive(Args, Debug)]
pub struct PredictCmd {
    #[arg(long)]
    pub checkpoint: std::path::PathBuf,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Output file prefix under the output directory
    #[arg(long, default_value = "predict")]
    pub out: String,
}

pub fn run(ctx: &Ctx, cmd: &PredictCmd) -> CliResult<()> {
    let ckpt = load_checkpoint(&cmd.checkpoint)?;
    let params = cmd.params.to_params()?;
    let prediction = predict(&ckpt, &params)?;

    let text_path = ctx.out_path(format!("{}.txt", cmd.out));
    std::fs::write(&text_path, prediction.distribution.to_text_table())?;

    println!("predicted schmidt number K = {:.6}", prediction.schmidt_number);
    println!("top modes (m, ell, weight):");
    for (m, ell, w) in prediction.distribution.top_modes(5) {
        println!("  {m:>2} {ell:>4} {w:.6e}");
    }
    println!("oam spectrum S(ell):");
    let ell_max = prediction.spectrum.ell_max();
    for ell in -ell_max..=ell_max {
        println!("  {ell:>4} {:.6e}", prediction.spectrum.get(ell));
    }
    println!("wrote {}", text_path.display());
    ctx.emit_manifest("predict", &[("checkpoint", ckpt.provenance.clone())])?;
    Ok(())
}
