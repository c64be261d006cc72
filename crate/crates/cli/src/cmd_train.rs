//! `train`: run the toy SGD harness, write the trajectory CSV, and compare
//! the averaged iterate's suboptimality against the convergence bound.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;
use shuffledp::bounds::ConvergenceInputs;
use shuffledp::trainer::{
    compare_to_bound, make_problem, run as run_training, LearningRate, PrivacyMechanism,
    ProblemKind, TrainingConfig,
};

use crate::output::{format_sig, num, render_json, JSON_SIG_DIGITS};
use crate::{emit, io, CliError};

#[derive(Args)]
pub struct TrainArgs {
    /// quadratic | symmetric-quadratic | logistic
    #[arg(long)]
    kind: String,
    /// Problem dimension
    #[arg(long)]
    dim: usize,
    /// Stochastic gradient noise standard deviation
    #[arg(long, default_value_t = 0.0)]
    noise_std: f64,
    /// Seed for every random stream (required: determinism by default)
    #[arg(long)]
    seed: u64,
    /// Separate seed for the problem instance (defaults to --seed)
    #[arg(long)]
    problem_seed: Option<u64>,
    /// none | blogs | gaussian
    #[arg(long, default_value = "none")]
    mechanism: String,
    /// Number of SGD steps
    #[arg(long)]
    steps: u64,
    /// Fixed learning rate; omit together with --optimal-lr
    #[arg(long)]
    eta: Option<f64>,
    /// Use the closed-form optimal learning rate instead of --eta
    #[arg(long, default_value_t = false)]
    optimal_lr: bool,
    /// L2 clip threshold; omit for no clipping (non-private runs only)
    #[arg(long)]
    clip: Option<f64>,
    /// Comma-separated per-group block sizes (blogs)
    #[arg(long)]
    block_sizes: Option<String>,
    /// Split the parameter vector into this many equal groups (blogs)
    #[arg(long, default_value_t = 1)]
    groups: usize,
    /// Gaussian baseline noise multiplier (noise std = multiplier * clip)
    #[arg(long, default_value_t = 0.0)]
    noise_multiplier: f64,
    /// Gradient norm second-moment bound G
    #[arg(long, default_value_t = 1.0)]
    grad_bound: f64,
    /// Delta pricing the blogs plan
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    /// Failure probability for the convergence bound comparison
    #[arg(long, default_value_t = 0.1)]
    bound_delta: f64,
    /// Override the shuffle-noise sigma fed to the bound (defaults to the
    /// parameter-wise value computed from the block sizes)
    #[arg(long)]
    bound_sigma: Option<f64>,
    /// Trajectory CSV (step,loss,dist,eps); stdout when omitted
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Summary JSON including the bound comparison; stdout when omitted
    #[arg(long)]
    out_json: Option<PathBuf>,
}

fn parse_kind(text: &str) -> Result<ProblemKind, CliError> {
    match text {
        "quadratic" => Ok(ProblemKind::Quadratic),
        "symmetric-quadratic" => Ok(ProblemKind::SymmetricQuadratic),
        "logistic" => Ok(ProblemKind::Logistic),
        other => Err(CliError::validation(format!(
            "unknown problem kind {other:?}: expected quadratic, symmetric-quadratic, or logistic"
        ))),
    }
}

fn parse_mechanism(text: &str) -> Result<PrivacyMechanism, CliError> {
    match text {
        "none" => Ok(PrivacyMechanism::None),
        "blogs" => Ok(PrivacyMechanism::Blogs),
        "gaussian" => Ok(PrivacyMechanism::Gaussian),
        other => Err(CliError::validation(format!(
            "unknown mechanism {other:?}: expected none, blogs, or gaussian"
        ))),
    }
}

/// Parameter-wise shuffle-noise bound: `sigma^2 = sum (beta_i - 1) G_i^2 / beta_i`
/// with the group bounds `G_i = G / sqrt(K)` so they sum to `G^2`.
fn default_bound_sigma(block_sizes: &[usize], grad_bound: f64) -> f64 {
    if block_sizes.is_empty() {
        return 0.0;
    }
    let k = block_sizes.len() as f64;
    let per_group = grad_bound * grad_bound / k;
    block_sizes
        .iter()
        .map(|&b| (b as f64 - 1.0) / b as f64 * per_group)
        .sum::<f64>()
        .sqrt()
}

pub fn run(args: TrainArgs) -> Result<(), CliError> {
    let kind = parse_kind(&args.kind)?;
    let mechanism = parse_mechanism(&args.mechanism)?;
    let learning_rate = match (args.eta, args.optimal_lr) {
        (Some(_), true) => {
            return Err(CliError::validation(
                "--eta and --optimal-lr are mutually exclusive",
            ))
        }
        (Some(eta), false) => LearningRate::Fixed(eta),
        (None, true) => LearningRate::Optimal,
        (None, false) => {
            return Err(CliError::validation(
                "a learning rate is required: pass --eta or --optimal-lr",
            ))
        }
    };
    let block_sizes = match &args.block_sizes {
        Some(text) => Some(io::parse_usize_list(text, "--block-sizes")?),
        None => None,
    };
    let problem = make_problem(
        kind,
        args.dim,
        args.noise_std,
        args.problem_seed.unwrap_or(args.seed),
    )?;
    let cfg = TrainingConfig {
        mechanism,
        steps: args.steps,
        learning_rate,
        clip: args.clip.unwrap_or(f64::INFINITY),
        block_sizes: block_sizes.clone(),
        groups: args.groups,
        noise_multiplier: args.noise_multiplier,
        grad_bound: args.grad_bound,
        delta: args.delta,
        seed: args.seed,
    };
    let traj = run_training(&problem, &cfg)?;

    let mut csv = String::from("step,loss,dist,eps\n");
    for record in &traj.records {
        let dist = record
            .distance
            .map_or_else(|| "nan".to_string(), |d| format_sig(d, JSON_SIG_DIGITS));
        csv.push_str(&format!(
            "{},{},{},{}\n",
            record.step,
            format_sig(record.loss, JSON_SIG_DIGITS),
            dist,
            format_sig(record.epsilon_spent, JSON_SIG_DIGITS),
        ));
    }
    emit(&csv, args.out_csv.as_ref())?;

    let sigma = args.bound_sigma.unwrap_or_else(|| match mechanism {
        PrivacyMechanism::Blogs => {
            default_bound_sigma(block_sizes.as_deref().unwrap_or(&[]), args.grad_bound)
        }
        _ => 0.0,
    });
    let r0 = problem
        .theta_star()
        .map(|star| star.iter().map(|x| x * x).sum::<f64>().sqrt());
    let bound_inputs = ConvergenceInputs {
        r0: r0.unwrap_or(0.0),
        grad_bound: args.grad_bound,
        sigma,
        smoothness: problem.smoothness(),
        learning_rate: traj.learning_rate,
        steps: args.steps.max(1),
        delta: args.bound_delta,
    };
    let comparison = compare_to_bound(&traj, &bound_inputs)?;

    let doc = json!({
        "final_loss": num(traj.records.last().expect("never empty").loss),
        "averaged_loss": num(traj.averaged_loss),
        "suboptimality": num(traj.suboptimality),
        "learning_rate": num(traj.learning_rate),
        "epsilon_total": num(traj.epsilon_total),
        "delta": num(traj.delta),
        "bound": {
            "value": num(comparison.bound),
            "observed": num(comparison.observed),
            "holds": comparison.holds,
            "sigma": num(sigma),
            "bound_delta": num(args.bound_delta),
        },
        "inputs": {
            "kind": args.kind,
            "dim": args.dim,
            "noise_std": num(args.noise_std),
            "seed": args.seed,
            "mechanism": args.mechanism,
            "steps": args.steps,
            "clip": num(cfg.clip),
            "groups": args.groups,
            "grad_bound": num(args.grad_bound),
        },
    });
    emit(&(render_json(&doc) + "\n"), args.out_json.as_ref())
}
