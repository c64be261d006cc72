//! `bounds`: evaluate a closed-form bound or diagnostic, printing a JSON
//! array of reports.

use std::path::PathBuf;

use clap::Args;
use serde_json::{json, Value};
use shuffledp::bounds::{
    check_block_ratio, convergence_bound, mi_bound, mi_bound_diagnostic, optimal_adaptive_params,
    optimal_block_size, optimal_epsilon_for_utility, optimal_learning_rate,
    reconstruction_bounds, utility_bound, utility_bound_diagnostic, variance_bound,
    variance_bound_diagnostic, BoundReport, ConvergenceInputs,
};
use shuffledp::grad::GradientVector;

use crate::output::{num, render_json};
use crate::{emit, io, CliError};

#[derive(Args)]
pub struct BoundsArgs {
    /// variance | utility | mi | reconstruction | optimal-epsilon |
    /// optimal-block | optimal-adaptive | optimal-lr | convergence |
    /// block-ratio | variance-diagnostic | mi-diagnostic | utility-diagnostic
    #[arg(long)]
    which: String,
    /// Block size
    #[arg(long)]
    beta: Option<usize>,
    /// Gradient component variance
    #[arg(long)]
    var_g: Option<f64>,
    /// Comma-separated group dimensions
    #[arg(long)]
    dims: Option<String>,
    /// Comma-separated group block sizes
    #[arg(long)]
    betas: Option<String>,
    /// L2 clip threshold
    #[arg(long)]
    clip: Option<f64>,
    /// Gradient dimension
    #[arg(long)]
    d: Option<usize>,
    /// Squared minimum component gap
    #[arg(long)]
    min_gap_sq: Option<f64>,
    /// Mutual information in nats
    #[arg(long)]
    mi: Option<f64>,
    /// L2 sensitivity
    #[arg(long)]
    delta2g: Option<f64>,
    /// Utility target U
    #[arg(long)]
    utility: Option<f64>,
    /// Privacy budget epsilon
    #[arg(long)]
    epsilon: Option<f64>,
    /// Per-iteration budget (optimal-adaptive)
    #[arg(long)]
    eps_t: Option<f64>,
    /// Number of steps
    #[arg(long)]
    t: Option<u64>,
    /// Failure probability delta
    #[arg(long)]
    delta: Option<f64>,
    /// Initial distance to the optimum
    #[arg(long)]
    r0: Option<f64>,
    /// Gradient norm second-moment bound G
    #[arg(long)]
    grad_bound: Option<f64>,
    /// Shuffle noise std bound sigma
    #[arg(long)]
    sigma: Option<f64>,
    /// Gradient Lipschitz constant L
    #[arg(long)]
    smoothness: Option<f64>,
    /// Learning rate eta
    #[arg(long)]
    eta: Option<f64>,
    /// Relative tolerance for the block-ratio check
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Comma-separated gradient components (diagnostics)
    #[arg(long)]
    components: Option<String>,
    /// Write the JSON here instead of stdout
    #[arg(long)]
    json_out: Option<PathBuf>,
}

fn require<T: Copy>(value: Option<T>, flag: &str, which: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::validation(format!("bounds --which {which} requires {flag}")))
}

fn require_list(
    value: &Option<String>,
    flag: &str,
    which: &str,
) -> Result<Vec<usize>, CliError> {
    let text = value
        .as_deref()
        .ok_or_else(|| CliError::validation(format!("bounds --which {which} requires {flag}")))?;
    io::parse_usize_list(text, flag)
}

fn gradient(value: &Option<String>, which: &str) -> Result<GradientVector, CliError> {
    let text = value.as_deref().ok_or_else(|| {
        CliError::validation(format!("bounds --which {which} requires --components"))
    })?;
    Ok(GradientVector::flat(io::parse_f64_list(text, "--components")?)?)
}

fn report_json(report: &BoundReport) -> Value {
    let mut doc = json!({
        "name": report.name,
        "value": num(report.value),
        "inputs": report.inputs,
    });
    if let Some(diag) = &report.diagnostic {
        doc["diagnostic"] = Value::String(diag.clone());
    }
    doc
}

pub fn run(args: BoundsArgs) -> Result<(), CliError> {
    let which = args.which.as_str();
    let reports: Vec<BoundReport> = match which {
        "variance" => {
            let beta = require(args.beta, "--beta", which)?;
            let var_g = require(args.var_g, "--var-g", which)?;
            vec![BoundReport::new(
                "variance_bound",
                variance_bound(beta, var_g)?,
                json!({ "beta": beta, "var_g": num(var_g) }),
            )]
        }
        "utility" => {
            let dims = require_list(&args.dims, "--dims", which)?;
            let betas = require_list(&args.betas, "--betas", which)?;
            let clip = require(args.clip, "--clip", which)?;
            vec![BoundReport::new(
                "utility_bound",
                utility_bound(&dims, &betas, clip)?,
                json!({ "dims": dims, "betas": betas, "clip": num(clip) }),
            )]
        }
        "mi" => {
            let dims = require_list(&args.dims, "--dims", which)?;
            let betas = require_list(&args.betas, "--betas", which)?;
            vec![BoundReport::new(
                "mi_bound",
                mi_bound(&dims, &betas)?,
                json!({ "dims": dims, "betas": betas }),
            )]
        }
        "reconstruction" => {
            let d = require(args.d, "--d", which)?;
            let beta = require(args.beta, "--beta", which)?;
            let var_g = require(args.var_g, "--var-g", which)?;
            let min_gap_sq = require(args.min_gap_sq, "--min-gap-sq", which)?;
            let mi = require(args.mi, "--mi", which)?;
            let r = reconstruction_bounds(d, beta, var_g, min_gap_sq, mi)?;
            let inputs = json!({
                "d": d, "beta": beta, "var_g": num(var_g),
                "min_gap_sq": num(min_gap_sq), "mi": num(mi),
            });
            let mut guess = BoundReport::new("reconstruction_guess_prob", r.guess_prob, inputs.clone());
            if r.guess_prob_is_log {
                guess = guess.with_diagnostic("reported as ln(1/d!): d exceeds 170");
            }
            vec![
                guess,
                BoundReport::new("reconstruction_error_lb_gap", r.expected_error_lb_gap, inputs.clone()),
                BoundReport::new("reconstruction_error_lb_rd", r.expected_error_lb_rd, inputs),
            ]
        }
        "optimal-epsilon" => {
            let d = require(args.d, "--d", which)?;
            let delta2g = require(args.delta2g, "--delta2g", which)?;
            let utility = require(args.utility, "--utility", which)?;
            let value = optimal_epsilon_for_utility(d, delta2g, utility)?;
            let mut report = BoundReport::new(
                "optimal_epsilon_for_utility",
                value,
                json!({ "d": d, "delta2g": num(delta2g), "utility": num(utility) }),
            );
            if value < 0.0 {
                report = report
                    .with_diagnostic("negative: the utility target exceeds the worst case");
            }
            vec![report]
        }
        "optimal-block" => {
            let d = require(args.d, "--d", which)?;
            let epsilon = require(args.epsilon, "--epsilon", which)?;
            let t = require(args.t, "--t", which)?;
            let delta = require(args.delta, "--delta", which)?;
            vec![BoundReport::new(
                "optimal_block_size",
                optimal_block_size(d, epsilon, t, delta)? as f64,
                json!({ "d": d, "epsilon": num(epsilon), "t": t, "delta": num(delta) }),
            )]
        }
        "optimal-adaptive" => {
            let d = require(args.d, "--d", which)?;
            let eps_t = require(args.eps_t, "--eps-t", which)?;
            let utility = require(args.utility, "--utility", which)?;
            let p = optimal_adaptive_params(d, eps_t, utility)?;
            let inputs = json!({ "d": d, "eps_t": num(eps_t), "utility": num(utility) });
            vec![
                BoundReport::new("optimal_adaptive_block_size", p.beta_star as f64, inputs.clone()),
                BoundReport::new("optimal_adaptive_clip", p.clip_star, inputs),
            ]
        }
        "optimal-lr" => {
            let r0 = require(args.r0, "--r0", which)?;
            let grad_bound = require(args.grad_bound, "--grad-bound", which)?;
            let t = require(args.t, "--t", which)?;
            vec![BoundReport::new(
                "optimal_learning_rate",
                optimal_learning_rate(r0, grad_bound, t)?,
                json!({ "r0": num(r0), "grad_bound": num(grad_bound), "t": t }),
            )]
        }
        "convergence" => {
            let inputs = ConvergenceInputs {
                r0: require(args.r0, "--r0", which)?,
                grad_bound: require(args.grad_bound, "--grad-bound", which)?,
                sigma: require(args.sigma, "--sigma", which)?,
                smoothness: require(args.smoothness, "--smoothness", which)?,
                learning_rate: require(args.eta, "--eta", which)?,
                steps: require(args.t, "--t", which)?,
                delta: require(args.delta, "--delta", which)?,
            };
            vec![BoundReport::new(
                "convergence_bound",
                convergence_bound(&inputs)?,
                serde_json::to_value(inputs).expect("inputs serialize"),
            )]
        }
        "block-ratio" => {
            let betas = require_list(&args.betas, "--betas", which)?;
            let dims = require_list(&args.dims, "--dims", which)?;
            let rel_tol = require(args.rel_tol, "--rel-tol", which)?;
            let holds = check_block_ratio(&betas, &dims, rel_tol)?;
            vec![BoundReport::new(
                "block_ratio_check",
                if holds { 1.0 } else { 0.0 },
                json!({ "betas": betas, "dims": dims, "rel_tol": num(rel_tol) }),
            )
            .with_diagnostic(format!("block sizes track dimensions: {holds}"))]
        }
        "variance-diagnostic" => {
            let g = gradient(&args.components, which)?;
            let beta = require(args.beta, "--beta", which)?;
            vec![variance_bound_diagnostic(&g, beta)?.to_report()]
        }
        "mi-diagnostic" => {
            let d = require(args.d, "--d", which)?;
            let beta = require(args.beta, "--beta", which)?;
            vec![mi_bound_diagnostic(d, beta, 0.0, 1.0)?.to_report()]
        }
        "utility-diagnostic" => {
            let g = gradient(&args.components, which)?;
            let beta = require(args.beta, "--beta", which)?;
            let clip = require(args.clip, "--clip", which)?;
            vec![utility_bound_diagnostic(&g, beta, clip)?.to_report()]
        }
        other => {
            return Err(CliError::validation(format!(
                "unknown bounds selector {other:?}"
            )))
        }
    };
    let doc = Value::Array(reports.iter().map(report_json).collect());
    emit(&(render_json(&doc) + "\n"), args.json_out.as_ref())
}
