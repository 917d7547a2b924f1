//! Loss-weight ablation study over seeds.

use crate::commands::train::{run_training, TrainCmd};
use crate::context::{CliError, CliResult, Ctx};
use clap::Args;
use spdc_oamnet::{eval::evaluate, LossWeights};

#[derive(Args, Debug)]
pub struct AblateCmd {
    /// Comma-separated ablation ids, e.g. "E0,E7,E9"
    #[arg(long, default_value = "E0,E7,E9")]
    pub ids: String,
    /// Seeds per id
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
    #[arg(long)]
    pub data: std::path::PathBuf,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 2e-3)]
    pub lr: f64,
    /// Backbone channels for the study protocol
    #[arg(long, default_value_t = 48)]
    pub channels: usize,
    /// Training-subset size after the split shuffle
    #[arg(long)]
    pub subset: Option<usize>,
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub split_fractions: String,
    #[arg(long, default_value_t = 42)]
    pub split_seed: u64,
    /// CSV output name under the output directory
    #[arg(long, default_value = "ablation.csv")]
    pub out: String,
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

pub fn run(ctx: &Ctx, cmd: &AblateCmd) -> CliResult<()> {
    let ids: Vec<String> = cmd.ids.split(',').map(|s| s.trim().to_string()).collect();
    for id in &ids {
        if LossWeights::ablation(id).is_none() {
            return Err(CliError::Invalid(format!("unknown ablation id `{id}`")));
        }
    }
    let mut csv = String::from(
        "id,w_jsd,w_kl,w_mse,w_wemd,w_oam,median_avg_jsd,median_avg_wemd,median_avg_kl\n",
    );
    println!("id    w_jsd w_kl  w_mse w_wemd w_oam | med JSD     med WEMD    med KL");
    for id in &ids {
        let w = LossWeights::ablation(id).unwrap();
        let mut jsds = Vec::new();
        let mut wemds = Vec::new();
        let mut kls = Vec::new();
        for s in 0..cmd.seeds {
            let train_cmd = TrainCmd {
                data: cmd.data.clone(),
                out: String::new(),
                history: String::new(),
                epochs: cmd.epochs,
                batch: cmd.batch,
                lr: cmd.lr,
                lr_min: 1e-5,
                patience: cmd.epochs,
                weights_id: id.clone(),
                split_fractions: cmd.split_fractions.clone(),
                split_seed: cmd.split_seed,
                channels: cmd.channels,
                baseline: false,
                subset: cmd.subset,
            };
            let outcome = run_training(ctx, &train_cmd, ctx.seed + s, None).map_err(|e| {
                CliError::Internal(format!("ablation {id} seed {s}: {}", e.message()))
            })?;
            let evaluation = evaluate(&outcome.checkpoint, &outcome.test)?;
            jsds.push(evaluation.mean.jsd);
            wemds.push(evaluation.mean.wemd);
            kls.push(evaluation.mean.kl);
        }
        let (mj, mw, mk) = (median(&mut jsds), median(&mut wemds), median(&mut kls));
        println!(
            "{id:<5} {:<5} {:<5} {:<5} {:<6} {:<5} | {mj:.4e} {mw:.4e} {mk:.4e}",
            w.jsd, w.kl, w.mse, w.wemd, w.oam
        );
        csv.push_str(&format!(
            "{id},{},{},{},{},{},{mj:.9e},{mw:.9e},{mk:.9e}\n",
            w.jsd, w.kl, w.mse, w.wemd, w.oam
        ));
    }
    let path = ctx.out_path(&cmd.out);
    std::fs::write(&path, csv)?;
    println!("wrote {}", path.display());
    ctx.emit_manifest("ablate", &[])?;
    Ok(())
}
