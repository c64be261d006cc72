//! Closed-form utility, variance, information-theoretic, reconstruction,
//! and optimal-parameter evaluators, plus small-instance diagnostics that
//! compare the closed forms against the exact enumeration oracle.

use serde::Serialize;
use serde_json::json;

use crate::accountant::check_delta_open;
use crate::error::{Error, Result};
use crate::grad::{
    enumerate_block_shuffles, exact_shuffle_variance, stats, GradientVector,
};

/// Uniform reporting envelope: a named value with an echo of its inputs and
/// an optional free-form diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub inputs: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, value: f64, inputs: serde_json::Value) -> Self {
        Self {
            name: name.into(),
            value,
            inputs,
            diagnostic: None,
        }
    }

    pub fn with_diagnostic(mut self, diagnostic: impl Into<String>) -> Self {
        self.diagnostic = Some(diagnostic.into());
        self
    }
}

fn check_aligned(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::MisalignedSequences { left, right });
    }
    Ok(())
}

fn check_beta_dim(beta: usize, dim: usize) -> Result<()> {
    if beta < 1 || beta > dim {
        return Err(Error::BlockSizeOutOfRange { beta, dim });
    }
    Ok(())
}

/// Per-component variance cap `((beta - 1) / beta) * var_g`.
pub fn variance_bound(beta: usize, var_g: f64) -> Result<f64> {
    if beta < 1 {
        return Err(Error::BlockSizeOutOfRange { beta, dim: beta });
    }
    if var_g.is_nan() || var_g < 0.0 {
        return Err(Error::NegativeValue {
            name: "var_g",
            value: var_g,
        });
    }
    Ok((beta as f64 - 1.0) / beta as f64 * var_g)
}

/// Expected squared noise norm across groups: `sum (d_i - beta_i) (2C)^2 / beta_i`.
pub fn utility_bound(dims: &[usize], betas: &[usize], clip: f64) -> Result<f64> {
    check_aligned(dims.len(), betas.len())?;
    if !clip.is_finite() || clip <= 0.0 {
        return Err(Error::InvalidClip(clip));
    }
    let four_c2 = (2.0 * clip) * (2.0 * clip);
    let mut acc = 0.0;
    for (&d, &b) in dims.iter().zip(betas) {
        check_beta_dim(b, d)?;
        acc += (d - b) as f64 * four_c2 / b as f64;
    }
    Ok(acc)
}

/// Mutual-information cap in nats: `sum ln(d_i / beta_i)`. A single group is
/// the `K = 1` case.
pub fn mi_bound(dims: &[usize], betas: &[usize]) -> Result<f64> {
    check_aligned(dims.len(), betas.len())?;
    let mut acc = 0.0;
    for (&d, &b) in dims.iter().zip(betas) {
        check_beta_dim(b, d)?;
        acc += (d as f64 / b as f64).ln();
    }
    Ok(acc)
}

/// `ln(d!)` by direct summation; exact enough for any practical `d`.
fn ln_factorial(d: usize) -> f64 {
    (1..=d).map(|k| (k as f64).ln()).sum()
}

/// Reconstruction bounds for one shuffled gradient.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReconstructionBounds {
    /// `1/d!`, or its natural log when `guess_prob_is_log` is set
    /// (factorials beyond 170 overflow f64).
    pub guess_prob: f64,
    pub guess_prob_is_log: bool,
    /// `(1 - 1/d!) * min_gap_sq`.
    pub expected_error_lb_gap: f64,
    /// `(d - beta) * e^(-2 mi / d) * var_g`.
    pub expected_error_lb_rd: f64,
}

pub fn reconstruction_bounds(
    d: usize,
    beta: usize,
    var_g: f64,
    min_gap_sq: f64,
    mi: f64,
) -> Result<ReconstructionBounds> {
    check_beta_dim(beta, d)?;
    for (name, value) in [("var_g", var_g), ("min_gap_sq", min_gap_sq), ("mi", mi)] {
        if value.is_nan() || value < 0.0 {
            return Err(Error::NegativeValue { name, value });
        }
    }
    let ln_fact = ln_factorial(d);
    let (guess_prob, guess_prob_is_log) = if d <= 170 {
        ((-ln_fact).exp(), false)
    } else {
        (-ln_fact, true)
    };
    let inv_fact = (-ln_fact).exp();
    let expected_error_lb_gap = (1.0 - inv_fact) * min_gap_sq;
    let expected_error_lb_rd = (d - beta) as f64 * (-2.0 * mi / d as f64).exp() * var_g;
    Ok(ReconstructionBounds {
        guess_prob,
        guess_prob_is_log,
        expected_error_lb_gap,
        expected_error_lb_rd,
    })
}

/// `eps* = (d/2) ln(2 delta2g^2 d / U)`. Negative when the utility target
/// exceeds the worst case; callers surface that as a warning, not an error.
pub fn optimal_epsilon_for_utility(d: usize, delta2g: f64, utility: f64) -> Result<f64> {
    if d < 1 {
        return Err(Error::InvalidDimension {
            name: String::new(),
        });
    }
    if !delta2g.is_finite() || delta2g <= 0.0 {
        return Err(Error::NonPositive {
            name: "delta2g",
            value: delta2g,
        });
    }
    if !utility.is_finite() || utility <= 0.0 {
        return Err(Error::NonPositive {
            name: "utility",
            value: utility,
        });
    }
    let d = d as f64;
    Ok(d / 2.0 * (2.0 * delta2g * delta2g * d / utility).ln())
}

/// `beta* = min(d, max(1, floor(d e^(-2 eps / (sqrt(2 T ln(1/delta)) d)))))`.
pub fn optimal_block_size(d: usize, epsilon: f64, steps: u64, delta: f64) -> Result<usize> {
    if d < 1 {
        return Err(Error::InvalidDimension {
            name: String::new(),
        });
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::NonPositive {
            name: "epsilon",
            value: epsilon,
        });
    }
    if steps < 1 {
        return Err(Error::InvalidSteps);
    }
    check_delta_open(delta)?;
    let stretch = (2.0 * steps as f64 * (1.0 / delta).ln()).sqrt();
    let raw = d as f64 * (-2.0 * epsilon / (stretch * d as f64)).exp();
    Ok((raw.floor() as usize).clamp(1, d))
}

/// Optimal adaptive block size and clip threshold:
/// `beta* = min(d, max(1, floor(d e^(-2 eps_t / d))))`, `C* = sqrt(U / (2d))`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OptimalAdaptiveParams {
    pub beta_star: usize,
    pub clip_star: f64,
}

pub fn optimal_adaptive_params(d: usize, eps_t: f64, utility: f64) -> Result<OptimalAdaptiveParams> {
    if d < 1 {
        return Err(Error::InvalidDimension {
            name: String::new(),
        });
    }
    if eps_t.is_nan() || eps_t < 0.0 {
        return Err(Error::NegativeEpsilon(eps_t));
    }
    if !utility.is_finite() || utility <= 0.0 {
        return Err(Error::NonPositive {
            name: "utility",
            value: utility,
        });
    }
    let raw = d as f64 * (-2.0 * eps_t / d as f64).exp();
    Ok(OptimalAdaptiveParams {
        beta_star: (raw.floor() as usize).clamp(1, d),
        clip_star: (utility / (2.0 * d as f64)).sqrt(),
    })
}

/// `eta* = sqrt(R0^2 / (G^2 T))`.
pub fn optimal_learning_rate(r0: f64, grad_bound: f64, steps: u64) -> Result<f64> {
    if !r0.is_finite() || r0 <= 0.0 {
        return Err(Error::NonPositive {
            name: "r0",
            value: r0,
        });
    }
    if !grad_bound.is_finite() || grad_bound <= 0.0 {
        return Err(Error::NonPositive {
            name: "grad_bound",
            value: grad_bound,
        });
    }
    if steps < 1 {
        return Err(Error::InvalidSteps);
    }
    Ok((r0 * r0 / (grad_bound * grad_bound * steps as f64)).sqrt())
}

/// Inputs for the whole-run convergence bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergenceInputs {
    /// Initial distance to the optimum.
    pub r0: f64,
    /// Second-moment bound on the stochastic gradient norm.
    pub grad_bound: f64,
    /// Standard-deviation bound on the shuffle noise.
    pub sigma: f64,
    /// Gradient Lipschitz constant of the objective.
    pub smoothness: f64,
    pub learning_rate: f64,
    pub steps: u64,
    /// Failure probability of the high-probability term.
    pub delta: f64,
}

impl ConvergenceInputs {
    fn validate(&self) -> Result<()> {
        if self.r0.is_nan() || self.r0 < 0.0 {
            return Err(Error::NegativeValue {
                name: "r0",
                value: self.r0,
            });
        }
        if self.sigma.is_nan() || self.sigma < 0.0 {
            return Err(Error::NegativeValue {
                name: "sigma",
                value: self.sigma,
            });
        }
        for (name, value) in [
            ("grad_bound", self.grad_bound),
            ("smoothness", self.smoothness),
            ("learning_rate", self.learning_rate),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::NonPositive { name, value });
            }
        }
        if self.steps < 1 {
            return Err(Error::InvalidSteps);
        }
        check_delta_open(self.delta)
    }
}

/// Suboptimality bound for the averaged iterate:
/// `R0^2/(2 eta T) + eta L (G^2 + sigma^2)/2 + (G + sigma) sqrt(2 ln(2/delta) / T)`.
pub fn convergence_bound(inp: &ConvergenceInputs) -> Result<f64> {
    inp.validate()?;
    let t = inp.steps as f64;
    let g2 = inp.grad_bound * inp.grad_bound;
    let s2 = inp.sigma * inp.sigma;
    Ok(inp.r0 * inp.r0 / (2.0 * inp.learning_rate * t)
        + inp.learning_rate * inp.smoothness * (g2 + s2) / 2.0
        + (inp.grad_bound + inp.sigma) * (2.0 * (2.0 / inp.delta).ln() / t).sqrt())
}

/// Check that chosen block sizes scale like the group dimensions: for every
/// ordered pair with `beta_j >= 2`,
/// `|beta_i/beta_j - d_i/d_j| <= rel_tol (d_i/d_j) + 1/beta_j`.
/// The `1/beta_j` term absorbs integer rounding.
pub fn check_block_ratio(betas: &[usize], dims: &[usize], rel_tol: f64) -> Result<bool> {
    check_aligned(betas.len(), dims.len())?;
    if !rel_tol.is_finite() || rel_tol <= 0.0 {
        return Err(Error::NonPositive {
            name: "rel_tol",
            value: rel_tol,
        });
    }
    for (&b, &d) in betas.iter().zip(dims) {
        check_beta_dim(b, d)?;
    }
    for i in 0..betas.len() {
        for j in 0..betas.len() {
            if i == j || betas[j] < 2 {
                continue;
            }
            let beta_ratio = betas[i] as f64 / betas[j] as f64;
            let dim_ratio = dims[i] as f64 / dims[j] as f64;
            if (beta_ratio - dim_ratio).abs() > rel_tol * dim_ratio + 1.0 / betas[j] as f64 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Small-instance diagnostics against the enumeration oracle
// ---------------------------------------------------------------------------

/// Comparison of the exact per-component shuffle variance against the
/// printed cap, listing the components that violate it.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceDiagnostic {
    pub dim: usize,
    pub beta: usize,
    pub bound: f64,
    pub exact: Vec<f64>,
    pub violations: Vec<usize>,
}

impl VarianceDiagnostic {
    pub fn to_report(&self) -> BoundReport {
        BoundReport::new(
            "variance_bound_diagnostic",
            self.bound,
            json!({ "dim": self.dim, "beta": self.beta }),
        )
        .with_diagnostic(format!(
            "exact per-component variances {:?}; {} of {} components exceed the cap {:.6e} \
             (violating indices {:?})",
            self.exact,
            self.violations.len(),
            self.dim,
            self.bound,
            self.violations,
        ))
    }
}

/// Compare [`exact_shuffle_variance`] against [`variance_bound`] on one
/// instance with `beta | d`. Produces the comparison; it does not assert the
/// cap, which is known to fail on some inputs.
pub fn variance_bound_diagnostic(g: &GradientVector, beta: usize) -> Result<VarianceDiagnostic> {
    let exact = exact_shuffle_variance(g, beta)?.into_components();
    let bound = variance_bound(beta, stats(g).variance)?;
    let violations = exact
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > bound + 1e-12)
        .map(|(i, _)| i)
        .collect();
    Ok(VarianceDiagnostic {
        dim: g.dim(),
        beta,
        bound,
        exact,
        violations,
    })
}

/// Plug-in information quantities for the shuffle channel under a uniform
/// prior over the `2^d` gradients with entries from a two-letter alphabet.
#[derive(Debug, Clone, Serialize)]
pub struct MiDiagnostic {
    pub dim: usize,
    pub beta: usize,
    /// The headline cap `ln(d / beta)`.
    pub headline_bound: f64,
    /// `ln(m!)`: the entropy of the block permutation.
    pub permutation_entropy: f64,
    /// Average conditional output entropy `H(M | g)` — the information the
    /// permutation injects per draw. Never exceeds `ln(m!)`.
    pub shuffle_channel_mi: f64,
    /// Plug-in `I(g; M) = H(M) - H(M | g)` under the two-letter prior.
    pub input_output_mi: f64,
}

impl MiDiagnostic {
    pub fn to_report(&self) -> BoundReport {
        BoundReport::new(
            "mi_bound_diagnostic",
            self.headline_bound,
            json!({ "dim": self.dim, "beta": self.beta }),
        )
        .with_diagnostic(format!(
            "shuffle-channel MI {:.6} vs permutation entropy ln(m!) = {:.6}; \
             plug-in input/output MI {:.6} vs headline ln(d/beta) = {:.6}",
            self.shuffle_channel_mi,
            self.permutation_entropy,
            self.input_output_mi,
            self.headline_bound,
        ))
    }
}

/// Exhaustively evaluate the shuffle channel on all `2^d` two-letter
/// gradients (uniform prior, letters `low` and `high`) and report plug-in
/// information quantities next to the closed-form caps. Requires `beta | d`
/// and `d <= 12` to keep the enumeration small.
pub fn mi_bound_diagnostic(dim: usize, beta: usize, low: f64, high: f64) -> Result<MiDiagnostic> {
    check_beta_dim(beta, dim)?;
    if !dim.is_multiple_of(beta) {
        return Err(Error::BlockSizeNotDivisor { beta, dim });
    }
    if dim > 12 {
        return Err(Error::InvalidConfig(format!(
            "mi diagnostic enumerates 2^d inputs; d = {dim} exceeds the limit of 12"
        )));
    }
    if !(low.is_finite() && high.is_finite()) || low == high {
        return Err(Error::InvalidConfig(
            "alphabet letters must be finite and distinct".into(),
        ));
    }
    let m = dim / beta;
    let prior = 1.0 / (1u64 << dim) as f64;
    let mut conditional_entropy = 0.0;
    let mut mixture: std::collections::BTreeMap<Vec<u64>, f64> = std::collections::BTreeMap::new();
    for mask in 0u64..(1 << dim) {
        let components: Vec<f64> = (0..dim)
            .map(|i| if mask >> i & 1 == 1 { high } else { low })
            .collect();
        let g = GradientVector::flat(components)?;
        let dist = enumerate_block_shuffles(&g, beta)?;
        conditional_entropy += prior * dist.entropy_nats();
        for (outcome, p) in dist.outcomes() {
            let key: Vec<u64> = outcome.iter().map(|x| x.to_bits()).collect();
            *mixture.entry(key).or_insert(0.0) += prior * p;
        }
    }
    let output_entropy = -mixture
        .values()
        .filter(|&&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>();
    Ok(MiDiagnostic {
        dim,
        beta,
        headline_bound: (dim as f64 / beta as f64).ln(),
        permutation_entropy: ln_factorial(m),
        shuffle_channel_mi: conditional_entropy,
        input_output_mi: output_entropy - conditional_entropy,
    })
}

/// Comparison of the summed exact per-component variance against the
/// expected-noise-norm cap on one clipping-inactive instance.
#[derive(Debug, Clone, Serialize)]
pub struct UtilityDiagnostic {
    pub dim: usize,
    pub beta: usize,
    pub bound: f64,
    pub total_exact_variance: f64,
    pub holds: bool,
}

impl UtilityDiagnostic {
    pub fn to_report(&self) -> BoundReport {
        BoundReport::new(
            "utility_bound_diagnostic",
            self.bound,
            json!({ "dim": self.dim, "beta": self.beta }),
        )
        .with_diagnostic(format!(
            "sum of exact per-component variances {:.6e} <= bound {:.6e}: {}",
            self.total_exact_variance, self.bound, self.holds,
        ))
    }
}

pub fn utility_bound_diagnostic(
    g: &GradientVector,
    beta: usize,
    clip: f64,
) -> Result<UtilityDiagnostic> {
    let total: f64 = exact_shuffle_variance(g, beta)?.components().iter().sum();
    let bound = utility_bound(&[g.dim()], &[beta], clip)?;
    Ok(UtilityDiagnostic {
        dim: g.dim(),
        beta,
        bound,
        total_exact_variance: total,
        holds: total <= bound,
    })
}
