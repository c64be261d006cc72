//! Deterministic toy SGD on synthetic convex problems, with the block
//! shuffle, a Gaussian baseline, and a non-private baseline behind one
//! update loop.

use std::sync::OnceLock;

use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::accountant::{ModelSpec, ParameterGroup};
use crate::bounds::{convergence_bound, optimal_learning_rate, BoundReport, ConvergenceInputs};
use crate::error::{Error, Result};
use crate::grad::GradientVector;
use crate::mechanism::Generator;
use crate::rng;

const THETA_STAR_LABEL: u64 = 0x74_6865_7461;
const DATA_LABEL: u64 = 0x6461_7461;
const NOISE_LABEL: u64 = 0x6e_6f69_7365;
const GAUSS_LABEL: u64 = 0x67_6175_7373;

const LOGISTIC_SAMPLES: usize = 200;
const LOGISTIC_RIDGE: f64 = 0.01;
const SYMMETRIC_TARGET: f64 = 3.0;
const DIVERGENCE_LIMIT: f64 = 1e12;

/// Synthetic objective family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// `f(theta) = 0.5 ||theta - theta*||^2` with `theta*` drawn from the seed.
    Quadratic,
    /// Quadratic with `theta* = 3 * ones`: gradients stay constant across
    /// coordinates, so every block shuffle is a fixed point.
    SymmetricQuadratic,
    /// Ridge-regularized logistic loss on 200 unit-norm samples.
    Logistic,
}

/// A fixed synthetic problem instance. Construction is deterministic in
/// `(kind, dim, noise_std, seed)`.
#[derive(Debug)]
pub struct Problem {
    pub kind: ProblemKind,
    pub dim: usize,
    pub noise_std: f64,
    pub seed: u64,
    theta_star: Option<Vec<f64>>,
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    optimum: OnceLock<f64>,
}

pub fn make_problem(kind: ProblemKind, dim: usize, noise_std: f64, seed: u64) -> Result<Problem> {
    if dim < 1 {
        return Err(Error::InvalidDimension {
            name: "problem".into(),
        });
    }
    if noise_std.is_nan() || noise_std < 0.0 {
        return Err(Error::NegativeValue {
            name: "noise_std",
            value: noise_std,
        });
    }
    let mut problem = Problem {
        kind,
        dim,
        noise_std,
        seed,
        theta_star: None,
        features: Vec::new(),
        labels: Vec::new(),
        optimum: OnceLock::new(),
    };
    match kind {
        ProblemKind::Quadratic => {
            let mut stream = rng::stream(&[seed, THETA_STAR_LABEL]);
            problem.theta_star = Some(
                (0..dim)
                    .map(|_| 10.0 * rng::uniform_f64(&mut stream) - 5.0)
                    .collect(),
            );
        }
        ProblemKind::SymmetricQuadratic => {
            problem.theta_star = Some(vec![SYMMETRIC_TARGET; dim]);
        }
        ProblemKind::Logistic => {
            let mut stream = rng::stream(&[seed, DATA_LABEL]);
            let gauss = Normal::new(0.0, 1.0).expect("unit normal");
            let truth: Vec<f64> = (0..dim).map(|_| gauss.sample(&mut stream)).collect();
            for _ in 0..LOGISTIC_SAMPLES {
                let mut row: Vec<f64> = (0..dim).map(|_| gauss.sample(&mut stream)).collect();
                let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                row.iter_mut().for_each(|x| *x /= norm);
                let margin: f64 = row.iter().zip(&truth).map(|(x, w)| x * w).sum();
                problem.labels.push(if margin >= 0.0 { 1.0 } else { -1.0 });
                problem.features.push(row);
            }
        }
    }
    Ok(problem)
}

fn log1p_exp(z: f64) -> f64 {
    if z <= 0.0 {
        z.exp().ln_1p()
    } else {
        z + (-z).exp().ln_1p()
    }
}

impl Problem {
    pub fn theta_star(&self) -> Option<&[f64]> {
        self.theta_star.as_deref()
    }

    /// Gradient Lipschitz constant of the objective.
    pub fn smoothness(&self) -> f64 {
        match self.kind {
            ProblemKind::Quadratic | ProblemKind::SymmetricQuadratic => 1.0,
            // Unit-norm rows: per-sample Hessian norm <= 1/4, plus the ridge.
            ProblemKind::Logistic => 0.25 + LOGISTIC_RIDGE,
        }
    }

    pub fn loss(&self, theta: &[f64]) -> f64 {
        match self.kind {
            ProblemKind::Quadratic | ProblemKind::SymmetricQuadratic => {
                let star = self.theta_star.as_ref().expect("quadratic has theta_star");
                0.5 * theta
                    .iter()
                    .zip(star)
                    .map(|(t, s)| (t - s) * (t - s))
                    .sum::<f64>()
            }
            ProblemKind::Logistic => {
                let n = self.features.len() as f64;
                let data: f64 = self
                    .features
                    .iter()
                    .zip(&self.labels)
                    .map(|(x, y)| {
                        let margin: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
                        log1p_exp(-y * margin)
                    })
                    .sum();
                let ridge: f64 = theta.iter().map(|t| t * t).sum::<f64>();
                data / n + 0.5 * LOGISTIC_RIDGE * ridge
            }
        }
    }

    pub fn true_gradient(&self, theta: &[f64]) -> Vec<f64> {
        match self.kind {
            ProblemKind::Quadratic | ProblemKind::SymmetricQuadratic => {
                let star = self.theta_star.as_ref().expect("quadratic has theta_star");
                theta.iter().zip(star).map(|(t, s)| t - s).collect()
            }
            ProblemKind::Logistic => {
                let n = self.features.len() as f64;
                let mut grad = vec![0.0; self.dim];
                for (x, y) in self.features.iter().zip(&self.labels) {
                    let margin: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
                    // d/dm ln(1 + e^(-y m)) = -y * sigmoid(-y m)
                    let weight = -y / (1.0 + (y * margin).exp());
                    for (g, xi) in grad.iter_mut().zip(x) {
                        *g += weight * xi / n;
                    }
                }
                for (g, t) in grad.iter_mut().zip(theta) {
                    *g += LOGISTIC_RIDGE * t;
                }
                grad
            }
        }
    }

    /// True gradient plus bounded zero-mean noise: each coordinate gets an
    /// independent uniform draw on `[-sqrt(3) std, sqrt(3) std]`, so the
    /// variance is exactly `std^2` and the norm stays bounded.
    pub fn stochastic_gradient(&self, theta: &[f64], step: u64) -> Vec<f64> {
        let mut grad = self.true_gradient(theta);
        if self.noise_std > 0.0 {
            let half_width = 3.0f64.sqrt() * self.noise_std;
            let mut stream = rng::stream(&[self.seed, NOISE_LABEL, step]);
            for g in &mut grad {
                *g += half_width * (2.0 * rng::uniform_f64(&mut stream) - 1.0);
            }
        }
        grad
    }

    /// Minimum objective value: exactly 0 for the quadratics, numerically
    /// estimated by full-gradient descent for the logistic instance.
    pub fn optimum_value(&self) -> f64 {
        match self.kind {
            ProblemKind::Quadratic | ProblemKind::SymmetricQuadratic => 0.0,
            ProblemKind::Logistic => *self.optimum.get_or_init(|| {
                let mut theta = vec![0.0; self.dim];
                let eta = 1.0 / self.smoothness();
                for _ in 0..5000 {
                    let grad = self.true_gradient(&theta);
                    for (t, g) in theta.iter_mut().zip(&grad) {
                        *t -= eta * g;
                    }
                }
                self.loss(&theta)
            }),
        }
    }
}

/// Which privatization runs between the gradient and the update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrivacyMechanism {
    None,
    Blogs,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningRate {
    Fixed(f64),
    /// `sqrt(R0^2 / (G^2 T))` with `R0 = ||theta_0 - theta*||`; quadratic
    /// problems only, since `theta*` must be known.
    Optimal,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainingConfig {
    pub mechanism: PrivacyMechanism,
    pub steps: u64,
    pub learning_rate: LearningRate,
    /// Clip threshold; `f64::INFINITY` disables clipping (non-private and
    /// Gaussian-free runs only).
    pub clip: f64,
    /// Per-group block sizes; required for the blogs mechanism.
    pub block_sizes: Option<Vec<usize>>,
    /// Number of equal-sized parameter groups the vector is split into.
    pub groups: usize,
    /// Gaussian baseline: noise std is `noise_multiplier * clip`.
    pub noise_multiplier: f64,
    /// Second-moment bound G on the stochastic gradient norm.
    pub grad_bound: f64,
    /// Prices the blogs plan's total epsilon.
    pub delta: f64,
    pub seed: u64,
}

impl TrainingConfig {
    /// Non-private run with a fixed learning rate and no clipping.
    pub fn non_private(steps: u64, eta: f64, seed: u64) -> Self {
        Self {
            mechanism: PrivacyMechanism::None,
            steps,
            learning_rate: LearningRate::Fixed(eta),
            clip: f64::INFINITY,
            block_sizes: None,
            groups: 1,
            noise_multiplier: 0.0,
            grad_bound: 1.0,
            delta: 1e-5,
            seed,
        }
    }
}

/// One trajectory row: the loss (and distance to the optimum, when known)
/// after `step` updates, plus the budget spent so far.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepRecord {
    pub step: u64,
    pub loss: f64,
    pub distance: Option<f64>,
    pub epsilon_spent: f64,
}

/// Full run record: `T + 1` rows including initialization, the raw
/// iterates, and the averaged iterate with its suboptimality.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub iterates: Vec<Vec<f64>>,
    pub averaged_iterate: Vec<f64>,
    pub averaged_loss: f64,
    /// `f(averaged) - f(theta*)`; the optimum is exact for quadratics and a
    /// numerical estimate for logistic.
    pub suboptimality: f64,
    pub learning_rate: f64,
    pub epsilon_total: f64,
    pub delta: f64,
}

fn distance_to(theta: &[f64], star: Option<&[f64]>) -> Option<f64> {
    star.map(|s| {
        theta
            .iter()
            .zip(s)
            .map(|(t, x)| (t - x) * (t - x))
            .sum::<f64>()
            .sqrt()
    })
}

fn build_generator(problem: &Problem, cfg: &TrainingConfig) -> Result<(Generator, Vec<usize>)> {
    if !cfg.clip.is_finite() || cfg.clip <= 0.0 {
        return Err(Error::InvalidClip(cfg.clip));
    }
    if cfg.groups < 1 || !problem.dim.is_multiple_of(cfg.groups) {
        return Err(Error::InvalidConfig(format!(
            "dimension {} cannot be split into {} equal groups",
            problem.dim, cfg.groups
        )));
    }
    let group_dim = problem.dim / cfg.groups;
    let dims = vec![group_dim; cfg.groups];
    let block_sizes = cfg
        .block_sizes
        .clone()
        .ok_or_else(|| Error::InvalidConfig("blogs mechanism requires block sizes".into()))?;
    let model = ModelSpec::new(
        dims.iter()
            .enumerate()
            .map(|(i, &dim)| ParameterGroup {
                name: format!("g{i}"),
                dim,
            })
            .collect(),
    )?;
    let generator = Generator::with_block_sizes(
        model,
        block_sizes,
        cfg.clip,
        cfg.delta,
        cfg.steps.max(1),
        1,
    )?;
    Ok((generator, dims))
}

/// Run `cfg.steps` SGD updates `theta <- theta - eta M(g)` from the origin
/// and record the trajectory. Aborts with a structured error if the loss
/// passes 1e12.
pub fn run(problem: &Problem, cfg: &TrainingConfig) -> Result<Trajectory> {
    if cfg.grad_bound.is_nan() || cfg.grad_bound <= 0.0 {
        return Err(Error::NonPositive {
            name: "grad_bound",
            value: cfg.grad_bound,
        });
    }
    if cfg.clip.is_nan() || cfg.clip <= 0.0 {
        return Err(Error::InvalidClip(cfg.clip));
    }
    let star = problem.theta_star();
    let eta = match cfg.learning_rate {
        LearningRate::Fixed(eta) => {
            if !eta.is_finite() || eta <= 0.0 {
                return Err(Error::NonPositive {
                    name: "learning_rate",
                    value: eta,
                });
            }
            eta
        }
        LearningRate::Optimal => {
            let star = star.ok_or_else(|| {
                Error::InvalidConfig(
                    "optimal learning rate needs a known optimum (quadratic problems)".into(),
                )
            })?;
            let r0 = distance_to(&vec![0.0; problem.dim], Some(star)).unwrap();
            optimal_learning_rate(r0, cfg.grad_bound, cfg.steps.max(1))?
        }
    };

    let mut generator = match cfg.mechanism {
        PrivacyMechanism::Blogs => Some(build_generator(problem, cfg)?),
        PrivacyMechanism::Gaussian => {
            if !cfg.clip.is_finite() {
                return Err(Error::InvalidClip(cfg.clip));
            }
            if cfg.noise_multiplier.is_nan() || cfg.noise_multiplier < 0.0 {
                return Err(Error::NegativeValue {
                    name: "noise_multiplier",
                    value: cfg.noise_multiplier,
                });
            }
            None
        }
        PrivacyMechanism::None => None,
    };

    let mut theta = vec![0.0; problem.dim];
    let mut iterates = vec![theta.clone()];
    let mut epsilon_spent = 0.0;
    let mut records = vec![StepRecord {
        step: 0,
        loss: problem.loss(&theta),
        distance: distance_to(&theta, star),
        epsilon_spent,
    }];

    for step in 0..cfg.steps {
        let raw = problem.stochastic_gradient(&theta, step);
        let update = match cfg.mechanism {
            PrivacyMechanism::None => {
                if cfg.clip.is_finite() {
                    crate::grad::clip(&GradientVector::flat(raw)?, cfg.clip)?.into_components()
                } else {
                    raw
                }
            }
            PrivacyMechanism::Blogs => {
                let (gen, dims) = generator.as_mut().expect("generator built above");
                let mut parts = Vec::with_capacity(dims.len());
                let mut offset = 0;
                for &dim in dims.iter() {
                    parts.push(GradientVector::flat(raw[offset..offset + dim].to_vec())?);
                    offset += dim;
                }
                let out = gen.generate(&parts, cfg.seed)?;
                epsilon_spent = out.epsilon_spent;
                let mut joined = Vec::with_capacity(problem.dim);
                for part in out.grads {
                    joined.extend(part.into_components());
                }
                joined
            }
            PrivacyMechanism::Gaussian => {
                let clipped =
                    crate::grad::clip(&GradientVector::flat(raw)?, cfg.clip)?.into_components();
                let sigma = cfg.noise_multiplier * cfg.clip;
                if sigma > 0.0 {
                    let gauss = Normal::new(0.0, sigma).expect("positive sigma");
                    let mut stream = rng::stream(&[cfg.seed, GAUSS_LABEL, step]);
                    clipped
                        .into_iter()
                        .map(|x| x + gauss.sample(&mut stream))
                        .collect()
                } else {
                    clipped
                }
            }
        };
        for (t, u) in theta.iter_mut().zip(&update) {
            *t -= eta * u;
        }
        let loss = problem.loss(&theta);
        if loss > DIVERGENCE_LIMIT {
            return Err(Error::Diverged {
                step: step + 1,
                loss,
            });
        }
        iterates.push(theta.clone());
        records.push(StepRecord {
            step: step + 1,
            loss,
            distance: distance_to(&theta, star),
            epsilon_spent,
        });
    }

    // Average of the post-update iterates theta_1..theta_T; the start point
    // stands in when no steps were taken.
    let averaged_iterate = if cfg.steps == 0 {
        iterates[0].clone()
    } else {
        let mut avg = vec![0.0; problem.dim];
        for iterate in &iterates[1..] {
            for (a, x) in avg.iter_mut().zip(iterate) {
                *a += x;
            }
        }
        let t = cfg.steps as f64;
        avg.iter_mut().for_each(|a| *a /= t);
        avg
    };
    let averaged_loss = problem.loss(&averaged_iterate);
    let suboptimality = averaged_loss - problem.optimum_value();

    Ok(Trajectory {
        records,
        iterates,
        averaged_iterate,
        averaged_loss,
        suboptimality,
        learning_rate: eta,
        epsilon_total: epsilon_spent,
        delta: cfg.delta,
    })
}

/// Observed suboptimality of the averaged iterate next to the closed-form
/// convergence bound.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceComparison {
    pub observed: f64,
    pub bound: f64,
    pub holds: bool,
}

impl ConvergenceComparison {
    pub fn to_report(&self) -> BoundReport {
        BoundReport::new(
            "convergence_bound",
            self.bound,
            serde_json::json!({ "observed": self.observed }),
        )
        .with_diagnostic(format!(
            "observed suboptimality {:.6e} <= bound {:.6e}: {}",
            self.observed, self.bound, self.holds
        ))
    }
}

pub fn compare_to_bound(traj: &Trajectory, inp: &ConvergenceInputs) -> Result<ConvergenceComparison> {
    let bound = convergence_bound(inp)?;
    Ok(ConvergenceComparison {
        observed: traj.suboptimality,
        bound,
        holds: traj.suboptimality <= bound,
    })
}
