//! `shuffle`: privatize one step of per-group gradients from a CSV.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;
use shuffledp::accountant::AccountantConfig;
use shuffledp::mechanism::Generator;

use crate::output::{num, render_json};
use crate::{emit, io, CliError};

#[derive(Args)]
pub struct ShuffleArgs {
    /// Gradient CSV: one row per parameter group, in ModelSpec order
    #[arg(long)]
    grads: PathBuf,
    /// ModelSpec JSON
    #[arg(long)]
    model: PathBuf,
    /// Target total privacy budget for the optimizer
    #[arg(long)]
    epsilon: f64,
    /// Privacy failure probability, in (0, 1)
    #[arg(long)]
    delta: f64,
    /// Number of steps the budget covers
    #[arg(long)]
    steps: u64,
    /// L2 clip threshold
    #[arg(long)]
    clip: f64,
    /// Seed for the shuffle streams (required: determinism by default)
    #[arg(long)]
    seed: u64,
    /// Batch size (stored; unused by the epsilon formulas)
    #[arg(long, default_value_t = 1)]
    batch: u64,
    /// Per-row tensor shapes as a JSON array of arrays, e.g. `[[2,2],[3]]`;
    /// rows are treated as flat when omitted
    #[arg(long)]
    shapes: Option<String>,
    /// Privatized gradients are written here as CSV
    #[arg(long)]
    out_csv: PathBuf,
    /// Spend report JSON (stdout when omitted)
    #[arg(long)]
    out_json: Option<PathBuf>,
}

pub fn run(args: ShuffleArgs) -> Result<(), CliError> {
    let model = io::read_model(&args.model)?;
    let mut gradients = io::read_gradients_csv(&args.grads)?;
    if let Some(text) = &args.shapes {
        let shapes = io::parse_shapes_json(text, "--shapes")?;
        if shapes.len() != gradients.len() {
            return Err(CliError::validation(format!(
                "--shapes lists {} shapes but the CSV has {} rows",
                shapes.len(),
                gradients.len()
            )));
        }
        gradients = gradients
            .into_iter()
            .zip(shapes)
            .map(|(g, shape)| shuffledp::grad::GradientVector::new(g.into_components(), shape))
            .collect::<Result<_, _>>()?;
    }
    let config = AccountantConfig {
        target_epsilon: args.epsilon,
        delta: args.delta,
        steps: args.steps,
        clip_value: args.clip,
        batch_size: args.batch,
    };
    let mut generator = Generator::init(model.clone(), config)?;
    let out = generator.generate(&gradients, args.seed)?;
    io::write_gradients_csv(&args.out_csv, &out.grads)?;
    let spent = generator.privacy_spent();
    let plan = generator.plan();
    let shapes_echo = match &args.shapes {
        Some(_) => serde_json::to_value(
            gradients.iter().map(|g| g.shape().to_vec()).collect::<Vec<_>>(),
        )
        .expect("shapes serialize"),
        None => serde_json::Value::Null,
    };
    let doc = json!({
        "epsilon_spent": num(out.epsilon_spent),
        "delta": num(out.delta),
        "fraction_elapsed": num(spent.fraction_elapsed),
        "block_sizes": plan.block_sizes,
        "warnings": plan.warnings,
        "inputs": {
            "model": model,
            "target_epsilon": num(args.epsilon),
            "delta": num(args.delta),
            "steps": args.steps,
            "clip_value": num(args.clip),
            "batch_size": args.batch,
            "seed": args.seed,
            "grads": args.grads.display().to_string(),
            "shapes": shapes_echo,
        },
    });
    emit(&(render_json(&doc) + "\n"), args.out_json.as_ref())
}
