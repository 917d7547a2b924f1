//! First-principles simulation of one configuration.

use crate::args::{CrystalArgs, GridArgs, ParamArgs};
use crate::context::{CliResult, Ctx};
use clap::Args;
use spdc_dataset::{
    provenance_hash, save_dataset, CrystalConfig, Dataset, DatasetHeader, DatasetRecord,
    ParamRanges, DATASET_VERSION,
};
use spdc_optics::PhysicalParams;
use spdc_schmidt::{oam_spectrum_marginal, schmidt_number, simulate, ModalDistribution};

#[derive(Args, Debug)]
pub struct SimulateCmd {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub crystal: CrystalArgs,
    /// Output file prefix under the output directory
    #[arg(long, default_value = "simulate")]
    pub out: String,
}

/// Wraps one simulated distribution in the dataset container format.
pub fn single_record_dataset(
    params: &PhysicalParams,
    dist: &ModalDistribution,
    gen: &spdc_dataset::GenConfig,
    crystal: &CrystalConfig,
    seed: u64,
) -> Dataset {
    let provenance = provenance_hash(gen, crystal);
    let ranges = ParamRanges {
        g: [params.g, params.g],
        theta_deg: [params.theta_deg, params.theta_deg],
        l_um: [params.l_um, params.l_um],
        w_p_um: [params.w_p_um, params.w_p_um],
        ell_p: vec![params.ell_p],
        p_p: vec![params.p_p],
    };
    Dataset {
        header: DatasetHeader {
            version: DATASET_VERSION,
            ranges,
            gen: *gen,
            crystal: *crystal,
            seed,
            count: 1,
            stratified: false,
            resampled: 0,
            provenance: provenance.clone(),
            stats: None,
        },
        records: vec![DatasetRecord {
            params: *params,
            weights: dist.flat().iter().map(|&w| w as f32).collect(),
            provenance,
        }],
    }
}

pub fn run(ctx: &Ctx, cmd: &SimulateCmd) -> CliResult<()> {
    let params = cmd.params.to_params()?;
    let crystal = cmd.crystal.to_spec()?;
    let grid = cmd.grid.grid_for(&params)?;
    let dist = simulate(&params, &crystal, &grid, cmd.grid.m_modes, cmd.grid.ell_max)?;
    let k = schmidt_number(&dist)?;
    let spectrum = oam_spectrum_marginal(&dist)?;

    let text_path = ctx.out_path(format!("{}.txt", cmd.out));
    std::fs::write(&text_path, dist.to_text_table())?;
    let gen = cmd.grid.gen_config();
    let crystal_cfg = CrystalConfig::from(&crystal);
    let ds = single_record_dataset(&params, &dist, &gen, &crystal_cfg, ctx.seed);
    let bin_path = ctx.out_path(format!("{}.oamd", cmd.out));
    save_dataset(&ds, &bin_path)?;

    println!("schmidt number K = {k:.6}");
    println!("captured low-gain weight = {:.6}", dist.captured_weight());
    println!("top modes (m, ell, weight):");
    for (m, ell, w) in dist.top_modes(5) {
        println!("  {m:>2} {ell:>4} {w:.6e}");
    }
    println!("oam spectrum S(ell):");
    for ell in -cmd.grid.ell_max..=cmd.grid.ell_max {
        println!("  {ell:>4} {:.6e}", spectrum.get(ell));
    }
    println!("wrote {} and {}", text_path.display(), bin_path.display());
    ctx.emit_manifest("simulate", &[("dataset", ds.header.provenance.clone())])?;
    Ok(())
}
