//! OAM spectra from the simulator, the surrogate, or both side by side.

use crate::args::{CrystalArgs, GridArgs, ParamArgs};
use crate::context::{CliError, CliResult, Ctx};
use clap::Args;
use spdc_oamnet::{eval::predict, load_checkpoint};
use spdc_schmidt::{oam_spectrum_marginal, simulate};

#[derive(Args, Debug)]
pub struct SpectrumCmd {
    /// Spectrum source: sim | model | both
    #[arg(long, default_value = "sim")]
    pub source: String,
    /// Checkpoint (required for model and both)
    #[arg(long)]
    pub checkpoint: Option<std::path::PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub crystal: CrystalArgs,
    /// CSV output name under the output directory
    #[arg(long, default_value = "spectrum.csv")]
    pub out: String,
}

pub fn run(ctx: &Ctx, cmd: &SpectrumCmd) -> CliResult<()> {
    let params = cmd.params.to_params()?;
    let want_sim = matches!(cmd.source.as_str(), "sim" | "both");
    let want_model = matches!(cmd.source.as_str(), "model" | "both");
    if !want_sim && !want_model {
        return Err(CliError::Invalid(format!(
            "unknown source `{}` (sim | model | both)",
            cmd.source
        )));
    }

    let sim_spec = if want_sim {
        let crystal = cmd.crystal.to_spec()?;
        let grid = cmd.grid.grid_for(&params)?;
        let dist = simulate(&params, &crystal, &grid, cmd.grid.m_modes, cmd.grid.ell_max)?;
        Some(oam_spectrum_marginal(&dist)?)
    } else {
        None
    };
    let model_spec = if want_model {
        let path = cmd.checkpoint.as_ref().ok_or_else(|| {
            CliError::Invalid("source `model`/`both` requires --checkpoint".into())
        })?;
        let ckpt = load_checkpoint(path)?;
        Some(predict(&ckpt, &params)?.spectrum)
    } else {
        None
    };

    let ell_max = sim_spec
        .as_ref()
        .map(|s| s.ell_max())
        .or_else(|| model_spec.as_ref().map(|s| s.ell_max()))
        .expect("at least one source");

    let mut header = String::from("ell");
    if want_sim {
        header.push_str(",s_sim");
    }
    if want_model {
        header.push_str(",s_model");
    }
    let mut csv = header.clone();
    csv.push('\n');
    println!("{header}");
    for ell in -ell_max..=ell_max {
        let mut row = format!("{ell}");
        if let Some(s) = &sim_spec {
            row.push_str(&format!(",{:.9e}", s.get(ell)));
        }
        if let Some(s) = &model_spec {
            if ell.abs() <= s.ell_max() {
                row.push_str(&format!(",{:.9e}", s.get(ell)));
            } else {
                row.push_str(",0");
            }
        }
        println!("{row}");
        csv.push_str(&row);
        csv.push('\n');
    }

    if let (Some(a), Some(b)) = (&sim_spec, &model_spec) {
        let pa = a.probs();
        let pb = b.probs();
        if pa.len() == pb.len() {
            let mae = spdc_metrics::mae(pb, pa)?;
            let cos = spdc_metrics::cosine_similarity(pb, pa)?;
            println!("mae = {mae:.6e}");
            println!("cosine = {cos:.6}");
            csv.push_str(&format!("# mae,{mae:.9e}\n# cosine,{cos:.9}\n"));
        }
    }

    let path = ctx.out_path(&cmd.out);
    std::fs::write(&path, csv)?;
    println!("wrote {}", path.display());
    ctx.emit_manifest("spectrum", &[])?;
    Ok(())
}
