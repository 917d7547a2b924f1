//! Checkpoint evaluation against a dataset split.

use crate::commands::train::parse_fractions;
use crate::context::{CliError, CliResult, Ctx};
use clap::Args;
use spdc_dataset::{load_dataset, split};
use spdc_metrics::MetricReport;
use spdc_oamnet::{eval::evaluate, load_checkpoint};

#[derive(Args, Debug)]
pub struct EvalCmd {
    #[arg(long)]
    pub checkpoint: std::path::PathBuf,
    #[arg(long)]
    pub data: std::path::PathBuf,
    /// Which split to evaluate: train | val | test | all
    #[arg(long, default_value = "test")]
    pub use_split: String,
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub split_fractions: String,
    #[arg(long, default_value_t = 42)]
    pub split_seed: u64,
    /// Per-sample CSV output name under the output directory
    #[arg(long, default_value = "eval.csv")]
    pub out: String,
}

pub fn run(ctx: &Ctx, cmd: &EvalCmd) -> CliResult<()> {
    let ckpt = load_checkpoint(&cmd.checkpoint)?;
    let dataset = load_dataset(&cmd.data)?;
    let fractions = parse_fractions(&cmd.split_fractions)?;
    let part = match cmd.use_split.as_str() {
        "all" => dataset,
        which => {
            let (train_ds, val_ds, test_ds) = split(&dataset, fractions, cmd.split_seed)?;
            match which {
                "train" => train_ds,
                "val" => val_ds,
                "test" => test_ds,
                other => {
                    return Err(CliError::Invalid(format!(
                        "unknown split `{other}` (train | val | test | all)"
                    )))
                }
            }
        }
    };
    let evaluation = evaluate(&ckpt, &part)?;
    println!(
        "evaluated {} samples from `{}` split:",
        evaluation.per_sample.len(),
        cmd.use_split
    );
    print!("{}", evaluation.mean.to_text_block());

    let mut csv = String::from("sample,");
    csv.push_str(MetricReport::csv_header());
    csv.push('\n');
    for (i, r) in evaluation.per_sample.iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", r.to_csv_row()));
    }
    csv.push_str(&format!("mean,{}\n", evaluation.mean.to_csv_row()));
    let path = ctx.out_path(&cmd.out);
    std::fs::write(&path, csv)?;
    println!("wrote {}", path.display());
    ctx.emit_manifest("eval", &[("dataset", ckpt.provenance.clone())])?;
    Ok(())
}
