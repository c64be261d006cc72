//! `compose`: one entry point for all composition and amplification
//! calculators, selected by `--mode`.

use std::path::PathBuf;

use clap::Args;
use serde_json::{json, Value};
use shuffledp::composition::{
    adaptive_allocate, adaptive_epsilon_bound, compose_advanced, compose_basic,
    compose_heterogeneous, compose_paramwise, optimal_sampling_prob, optimal_sampling_ratio,
    per_step_budget, poisson_amplify, poisson_epsilon_zero, subsample_amplify, AdaptiveBound,
    PrivacyParams, SubsampleParams,
};

use crate::output::{num, render_json};
use crate::{emit, io, CliError};

#[derive(Args)]
pub struct ComposeArgs {
    /// basic | hetero | advanced | per-step | subsample | poisson | q-star |
    /// q-prob | paramwise | adaptive | adaptive-bound
    #[arg(long)]
    mode: String,
    /// Per-step epsilon (basic, advanced, subsample, poisson, q-star, q-prob)
    #[arg(long)]
    epsilon: Option<f64>,
    /// Per-step delta (basic, advanced, subsample, poisson)
    #[arg(long)]
    delta: Option<f64>,
    /// Number of composed steps
    #[arg(long)]
    t: Option<u64>,
    /// Slack delta added by advanced composition
    #[arg(long)]
    delta_prime: Option<f64>,
    /// Comma-separated per-group epsilons (hetero, paramwise)
    #[arg(long)]
    eps_list: Option<String>,
    /// Comma-separated per-group deltas (hetero, paramwise)
    #[arg(long)]
    delta_list: Option<String>,
    /// Sampling ratio in (0, 1]
    #[arg(long)]
    q: Option<f64>,
    /// Whole-run budget (per-step, adaptive)
    #[arg(long)]
    epsilon_total: Option<f64>,
    /// Budget already spent (adaptive)
    #[arg(long)]
    epsilon_spent: Option<f64>,
    /// Current step index (adaptive)
    #[arg(long)]
    step_t: Option<u64>,
    /// Slack delta for the adaptive allocation (adaptive, adaptive-bound)
    #[arg(long)]
    delta_star: Option<f64>,
    /// Target amplified epsilon (q-prob)
    #[arg(long)]
    epsilon_prime: Option<f64>,
    /// adaptive-bound variant: max | two-sided | sampled
    #[arg(long)]
    variant: Option<String>,
    /// Worst per-step epsilon (adaptive-bound max/sampled)
    #[arg(long)]
    max_eps: Option<f64>,
    /// Worst per-step delta (adaptive-bound max/sampled)
    #[arg(long)]
    max_delta: Option<f64>,
    /// Clip threshold cap (adaptive-bound two-sided)
    #[arg(long)]
    c_max: Option<f64>,
    /// Block size cap (adaptive-bound two-sided)
    #[arg(long)]
    beta_max: Option<usize>,
    /// Gradient dimension (adaptive-bound two-sided)
    #[arg(long)]
    d: Option<usize>,
    /// Write the JSON here instead of stdout
    #[arg(long)]
    json_out: Option<PathBuf>,
}

fn require<T: Copy>(value: Option<T>, flag: &str, mode: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::validation(format!("mode {mode} requires {flag}")))
}

fn require_str<'a>(value: &'a Option<String>, flag: &str, mode: &str) -> Result<&'a str, CliError> {
    value
        .as_deref()
        .ok_or_else(|| CliError::validation(format!("mode {mode} requires {flag}")))
}

pub fn run(args: ComposeArgs) -> Result<(), CliError> {
    let mode = args.mode.as_str();
    let (body, inputs): (Value, Value) = match mode {
        "basic" => {
            let eps = require(args.epsilon, "--epsilon", mode)?;
            let delta = require(args.delta, "--delta", mode)?;
            let t = require(args.t, "--t", mode)?;
            let out = compose_basic(PrivacyParams::new(eps, delta)?, t)?;
            (
                json!({ "epsilon": num(out.epsilon), "delta": num(out.delta) }),
                json!({ "epsilon": num(eps), "delta": num(delta), "t": t }),
            )
        }
        "hetero" => {
            let eps = io::parse_f64_list(require_str(&args.eps_list, "--eps-list", mode)?, "--eps-list")?;
            let deltas =
                io::parse_f64_list(require_str(&args.delta_list, "--delta-list", mode)?, "--delta-list")?;
            let out = compose_heterogeneous(&eps, &deltas)?;
            (
                json!({ "epsilon": num(out.epsilon), "delta": num(out.delta) }),
                json!({
                    "eps_list": eps.iter().map(|&e| num(e)).collect::<Vec<_>>(),
                    "delta_list": deltas.iter().map(|&d| num(d)).collect::<Vec<_>>(),
                }),
            )
        }
        "advanced" => {
            let eps = require(args.epsilon, "--epsilon", mode)?;
            let delta = require(args.delta, "--delta", mode)?;
            let t = require(args.t, "--t", mode)?;
            let delta_prime = require(args.delta_prime, "--delta-prime", mode)?;
            let out = compose_advanced(PrivacyParams::new(eps, delta)?, t, delta_prime)?;
            (
                json!({ "epsilon": num(out.epsilon), "delta": num(out.delta) }),
                json!({
                    "epsilon": num(eps), "delta": num(delta), "t": t,
                    "delta_prime": num(delta_prime),
                }),
            )
        }
        "per-step" => {
            let total = require(args.epsilon_total, "--epsilon-total", mode)?;
            let t = require(args.t, "--t", mode)?;
            let delta_prime = require(args.delta_prime, "--delta-prime", mode)?;
            let eps = per_step_budget(total, t, delta_prime)?;
            (
                json!({ "epsilon": num(eps) }),
                json!({ "epsilon_total": num(total), "t": t, "delta_prime": num(delta_prime) }),
            )
        }
        "subsample" => {
            let eps = require(args.epsilon, "--epsilon", mode)?;
            let delta = require(args.delta, "--delta", mode)?;
            let q = require(args.q, "--q", mode)?;
            let out = subsample_amplify(PrivacyParams::new(eps, delta)?, SubsampleParams::new(q)?)?;
            (
                json!({ "epsilon": num(out.epsilon), "delta": num(out.delta) }),
                json!({ "epsilon": num(eps), "delta": num(delta), "q": num(q) }),
            )
        }
        "poisson" => {
            let eps = require(args.epsilon, "--epsilon", mode)?;
            let delta = require(args.delta, "--delta", mode)?;
            let q = require(args.q, "--q", mode)?;
            let eps_prime =
                poisson_amplify(PrivacyParams::new(eps, delta)?, SubsampleParams::new(q)?)?;
            let eps_zero = poisson_epsilon_zero(q, delta)?;
            (
                json!({
                    "epsilon": num(eps_prime),
                    "epsilon_zero": num(eps_zero),
                    "delta": num(delta),
                }),
                json!({ "epsilon": num(eps), "delta": num(delta), "q": num(q) }),
            )
        }
        "q-star" => {
            let eps = require(args.epsilon, "--epsilon", mode)?;
            let t = require(args.t, "--t", mode)?;
            let q = optimal_sampling_ratio(eps, t)?;
            (
                json!({ "q_star": num(q) }),
                json!({ "epsilon": num(eps), "t": t }),
            )
        }
        "q-prob" => {
            let eps_prime = require(args.epsilon_prime, "--epsilon-prime", mode)?;
            let eps = require(args.epsilon, "--epsilon", mode)?;
            let q = optimal_sampling_prob(eps_prime, eps)?;
            (
                json!({ "q_star": num(q) }),
                json!({ "epsilon_prime": num(eps_prime), "epsilon": num(eps) }),
            )
        }
        "paramwise" => {
            let eps = io::parse_f64_list(require_str(&args.eps_list, "--eps-list", mode)?, "--eps-list")?;
            let deltas =
                io::parse_f64_list(require_str(&args.delta_list, "--delta-list", mode)?, "--delta-list")?;
            let t = require(args.t, "--t", mode)?;
            let delta = require(args.delta, "--delta", mode)?;
            let out = compose_paramwise(&eps, &deltas, t, delta)?;
            (
                json!({ "epsilon": num(out.epsilon), "delta": num(out.delta) }),
                json!({
                    "eps_list": eps.iter().map(|&e| num(e)).collect::<Vec<_>>(),
                    "delta_list": deltas.iter().map(|&d| num(d)).collect::<Vec<_>>(),
                    "t": t,
                    "delta": num(delta),
                }),
            )
        }
        "adaptive" => {
            let total = require(args.epsilon_total, "--epsilon-total", mode)?;
            let spent = require(args.epsilon_spent, "--epsilon-spent", mode)?;
            let step = require(args.step_t, "--step-t", mode)?;
            let t = require(args.t, "--t", mode)?;
            let delta_star = require(args.delta_star, "--delta-star", mode)?;
            let eps = adaptive_allocate(total, spent, step, t, delta_star)?;
            (
                json!({ "epsilon": num(eps) }),
                json!({
                    "epsilon_total": num(total), "epsilon_spent": num(spent),
                    "step_t": step, "t": t, "delta_star": num(delta_star),
                }),
            )
        }
        "adaptive-bound" => {
            let variant = require_str(&args.variant, "--variant", mode)?;
            let (bound, inputs) = match variant {
                "max" => {
                    let max_eps = require(args.max_eps, "--max-eps", mode)?;
                    let max_delta = require(args.max_delta, "--max-delta", mode)?;
                    let t = require(args.t, "--t", mode)?;
                    let delta_star = require(args.delta_star, "--delta-star", mode)?;
                    (
                        AdaptiveBound::AdaptiveMax {
                            max_epsilon: max_eps,
                            max_delta,
                            steps: t,
                            delta_star,
                        },
                        json!({
                            "variant": "max", "max_eps": num(max_eps),
                            "max_delta": num(max_delta), "t": t, "delta_star": num(delta_star),
                        }),
                    )
                }
                "two-sided" => {
                    let c_max = require(args.c_max, "--c-max", mode)?;
                    let beta_max = require(args.beta_max, "--beta-max", mode)?;
                    let d = require(args.d, "--d", mode)?;
                    let t = require(args.t, "--t", mode)?;
                    let delta = require(args.delta, "--delta", mode)?;
                    (
                        AdaptiveBound::AdaptiveTwoSided {
                            clip_max: c_max,
                            block_max: beta_max,
                            dim: d,
                            steps: t,
                            delta,
                        },
                        json!({
                            "variant": "two-sided", "c_max": num(c_max), "beta_max": beta_max,
                            "d": d, "t": t, "delta": num(delta),
                        }),
                    )
                }
                "sampled" => {
                    let max_eps = require(args.max_eps, "--max-eps", mode)?;
                    let max_delta = require(args.max_delta, "--max-delta", mode)?;
                    let q = require(args.q, "--q", mode)?;
                    let t = require(args.t, "--t", mode)?;
                    let delta_star = require(args.delta_star, "--delta-star", mode)?;
                    (
                        AdaptiveBound::SampledAdaptive {
                            max_epsilon: max_eps,
                            max_delta,
                            q,
                            steps: t,
                            delta_star,
                        },
                        json!({
                            "variant": "sampled", "max_eps": num(max_eps),
                            "max_delta": num(max_delta), "q": num(q), "t": t,
                            "delta_star": num(delta_star),
                        }),
                    )
                }
                other => {
                    return Err(CliError::validation(format!(
                        "unknown adaptive-bound variant {other:?}: expected max, two-sided, or sampled"
                    )))
                }
            };
            let out = adaptive_epsilon_bound(&bound)?;
            (
                json!({ "epsilon": num(out.epsilon), "delta": num(out.delta) }),
                inputs,
            )
        }
        other => {
            return Err(CliError::validation(format!(
                "unknown compose mode {other:?}: expected basic, hetero, advanced, per-step, \
                 subsample, poisson, q-star, q-prob, paramwise, adaptive, or adaptive-bound"
            )))
        }
    };
    let mut doc = body;
    doc["mode"] = Value::String(mode.to_string());
    doc["inputs"] = inputs;
    emit(&(render_json(&doc) + "\n"), args.json_out.as_ref())
}
