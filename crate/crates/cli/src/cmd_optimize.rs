//! `optimize`: run the block-size optimizer and print the plan as JSON.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;
use shuffledp::accountant::{optimize_block_sizes, AccountantConfig};

use crate::output::{num, render_json};
use crate::{emit, io, CliError};

#[derive(Args)]
pub struct OptimizeArgs {
    /// ModelSpec JSON: {"groups":[{"name":"g0","dim":4}, ...]}
    #[arg(long)]
    model: PathBuf,
    /// Target total privacy budget
    #[arg(long)]
    epsilon: f64,
    /// Privacy failure probability, in (0, 1)
    #[arg(long)]
    delta: f64,
    /// Number of training steps the budget covers
    #[arg(long)]
    steps: u64,
    /// L2 clip threshold
    #[arg(long)]
    clip: f64,
    /// Batch size (stored; the epsilon formulas do not use it)
    #[arg(long)]
    batch: u64,
    /// Write the JSON here instead of stdout
    #[arg(long)]
    json_out: Option<PathBuf>,
}

pub fn run(args: OptimizeArgs) -> Result<(), CliError> {
    let model = io::read_model(&args.model)?;
    let config = AccountantConfig {
        target_epsilon: args.epsilon,
        delta: args.delta,
        steps: args.steps,
        clip_value: args.clip,
        batch_size: args.batch,
    };
    let plan = optimize_block_sizes(&model, &config)?;
    if plan.epsilon_total > config.target_epsilon {
        eprintln!(
            "warning: achieved epsilon_total {} exceeds the target {} (the optimizer minimizes \
             distance, not one-sided error)",
            crate::output::format_sig(plan.epsilon_total, 12),
            crate::output::format_sig(config.target_epsilon, 12),
        );
    }
    let doc = json!({
        "block_sizes": plan.block_sizes,
        "per_group_epsilon": plan.per_group_epsilon.iter().map(|&e| num(e)).collect::<Vec<_>>(),
        "epsilon_per_step": num(plan.epsilon_per_step),
        "epsilon_total": num(plan.epsilon_total),
        "target_gap": num(plan.target_gap),
        "warnings": plan.warnings,
        "inputs": {
            "model": model,
            "target_epsilon": num(args.epsilon),
            "delta": num(args.delta),
            "steps": args.steps,
            "clip_value": num(args.clip),
            "batch_size": args.batch,
        },
    });
    emit(&(render_json(&doc) + "\n"), args.json_out.as_ref())
}
