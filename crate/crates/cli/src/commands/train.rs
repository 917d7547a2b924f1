//! Surrogate training.

use crate::context::{CliError, CliResult, Ctx};
use clap::Args;
use spdc_dataset::{compute_stats, load_dataset, split, Dataset};
use spdc_oamnet::{
    eval, save_checkpoint, train as train_model, Checkpoint, LossWeights, ModelConfig, OamNet,
    PreparedData, TrainConfig,
};

#[derive(Args, Debug, Clone)]
pub struct TrainCmd {
    /// Dataset file
    #[arg(long)]
    pub data: std::path::PathBuf,
    /// Checkpoint output name under the output directory
    #[arg(long, default_value = "model.oamc")]
    pub out: String,
    /// Training-history JSONL name under the output directory
    #[arg(long, default_value = "history.jsonl")]
    pub history: String,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub lr_min: f64,
    #[arg(long, default_value_t = 20)]
    pub patience: usize,
    /// Loss-weight row E0..E9
    #[arg(long, default_value = "E7")]
    pub weights_id: String,
    /// Train/val/test fractions
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub split_fractions: String,
    /// Split shuffle seed (shared with eval for congruent splits)
    #[arg(long, default_value_t = 42)]
    pub split_seed: u64,
    /// Backbone channels
    #[arg(long, default_value_t = 104)]
    pub channels: usize,
    /// Train the parameter-matched unconditioned baseline (no FiLM)
    #[arg(long)]
    pub baseline: bool,
    /// Use only the first N training records after the split shuffle
    #[arg(long)]
    pub subset: Option<usize>,
}

pub fn parse_fractions(text: &str) -> CliResult<[f64; 3]> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Invalid(format!("bad fraction `{s}`")))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    if parts.len() != 3 {
        return Err(CliError::Invalid(format!(
            "expected three fractions, got {}",
            parts.len()
        )));
    }
    Ok([parts[0], parts[1], parts[2]])
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub test: Dataset,
    pub epochs_run: usize,
    pub best_val_total: f64,
}

/// Shared by `train` and `ablate`: split, standardize, train, package.
pub fn run_training(
    ctx: &Ctx,
    cmd: &TrainCmd,
    model_seed: u64,
    history_sink: Option<&mut dyn std::io::Write>,
) -> CliResult<TrainOutcome> {
    let dataset = load_dataset(&cmd.data)?;
    let fractions = parse_fractions(&cmd.split_fractions)?;
    let (mut train_ds, val_ds, test_ds) = split(&dataset, fractions, cmd.split_seed)?;
    if let Some(n) = cmd.subset {
        train_ds.records.truncate(n);
        train_ds.header.count = train_ds.records.len();
    }
    let stats = compute_stats(&train_ds)?;

    let mut cfg = if cmd.baseline {
        ModelConfig::baseline()
    } else {
        ModelConfig::default()
    };
    cfg.channels = cmd.channels;
    if cmd.baseline && cmd.channels == 104 {
        cfg.channels = 112; // parameter-matched default for the baseline
    }
    cfg.m_modes = dataset.header.gen.m_modes;
    cfg.ell_max = dataset.header.gen.ell_max;

    let weights = LossWeights::ablation(&cmd.weights_id)
        .ok_or_else(|| CliError::Invalid(format!("unknown weights id `{}`", cmd.weights_id)))?;
    let mut model = OamNet::new(cfg, model_seed);
    let prepared_train = PreparedData::from_dataset(&train_ds, &stats, &model)?;
    let prepared_val = PreparedData::from_dataset(&val_ds, &stats, &model)?;

    let train_cfg = TrainConfig {
        epochs: cmd.epochs,
        batch_size: cmd.batch,
        lr: cmd.lr,
        lr_min: cmd.lr_min,
        patience: cmd.patience,
        seed: model_seed,
        weights,
    };
    let report = train_model(
        &mut model,
        &prepared_train,
        &prepared_val,
        &train_cfg,
        history_sink,
    )
    .map_err(|e| match e {
        spdc_oamnet::OamnetError::NonFiniteLoss { epoch, batch } => CliError::Internal(format!(
            "non-finite loss (weights {}) at epoch {epoch}, batch {batch}",
            cmd.weights_id
        )),
        other => other.into(),
    })?;

    let _ = ctx;
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            model,
            stats,
            weights,
            seed: model_seed,
            gen: dataset.header.gen,
            provenance: dataset.header.provenance.clone(),
        },
        test: test_ds,
        epochs_run: report.epochs_run,
        best_val_total: report.best_val_total,
    })
}

pub fn run(ctx: &Ctx, cmd: &TrainCmd) -> CliResult<()> {
    let history_path = ctx.out_path(&cmd.history);
    let mut history_file = std::fs::File::create(&history_path)?;
    let outcome = run_training(ctx, cmd, ctx.seed, Some(&mut history_file))?;

    let ckpt_path = ctx.out_path(&cmd.out);
    save_checkpoint(&outcome.checkpoint, &ckpt_path)?;
    println!(
        "trained {} parameters for {} epochs (best val total {:.6e})",
        outcome.checkpoint.model.param_count(),
        outcome.epochs_run,
        outcome.best_val_total
    );
    if !outcome.test.is_empty() {
        let evaluation = eval::evaluate(&outcome.checkpoint, &outcome.test)?;
        println!("held-out test metrics:");
        print!("{}", evaluation.mean.to_text_block());
    }
    println!("wrote {} and {}", ckpt_path.display(), history_path.display());
    ctx.emit_manifest(
        "train",
        &[("dataset", outcome.checkpoint.provenance.clone())],
    )?;
    Ok(())
}
