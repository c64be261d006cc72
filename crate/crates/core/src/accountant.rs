//! Per-group epsilon formulas, whole-run composition, and the nested
//! binary-search block-size optimizer.
//!
//! For a parameter group of dimension `d` shuffled with block size `beta`
//! under clip threshold `C`, the per-step privacy loss is the smaller of two
//! closed forms:
//!
//! ```text
//! eps1 = 2 ln(1 + d (e^(2C/sqrt(d)) - 1))
//! eps2 = 2 ln(1 + (beta/d) (e^(2C sqrt(beta/d)) - 1))
//! ```
//!
//! Summed over groups and composed over `T` steps this gives
//!
//! ```text
//! eps_total = sqrt(2 T ln(1/delta)) eps_step + T eps_step (e^eps_step - 1)
//! ```
//!
//! The optimizer bisects on a per-group target epsilon, picking for each
//! group the largest block size whose epsilon stays under the target, and
//! keeps the probe whose composed total lands closest to the requested
//! budget.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One named slice of the model's parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterGroup {
    pub name: String,
    pub dim: usize,
}

/// Ordered parameter groups; the accountant's description of the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub groups: Vec<ParameterGroup>,
}

impl ModelSpec {
    pub fn new(groups: Vec<ParameterGroup>) -> Result<Self> {
        let spec = Self { groups };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::EmptyModel);
        }
        let mut seen = std::collections::BTreeSet::new();
        for group in &self.groups {
            if group.dim < 1 {
                return Err(Error::InvalidDimension {
                    name: group.name.clone(),
                });
            }
            if !seen.insert(group.name.as_str()) {
                return Err(Error::DuplicateGroupName {
                    name: group.name.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn total_parameters(&self) -> usize {
        self.groups.iter().map(|g| g.dim).sum()
    }
}

/// Budget and mechanism parameters for one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccountantConfig {
    pub target_epsilon: f64,
    pub delta: f64,
    pub steps: u64,
    pub clip_value: f64,
    /// Stored for completeness; the printed epsilon formulas do not use it.
    pub batch_size: u64,
}

impl AccountantConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.target_epsilon.is_finite() || self.target_epsilon <= 0.0 {
            return Err(Error::InvalidEpsilon(self.target_epsilon));
        }
        check_delta_open(self.delta)?;
        if self.steps < 1 {
            return Err(Error::InvalidSteps);
        }
        if !self.clip_value.is_finite() || self.clip_value <= 0.0 {
            return Err(Error::InvalidClip(self.clip_value));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidBatchSize);
        }
        Ok(())
    }
}

pub(crate) fn check_delta_open(delta: f64) -> Result<()> {
    if delta.is_nan() || delta <= 0.0 || delta >= 1.0 {
        return Err(Error::InvalidDelta {
            value: delta,
            range: "(0, 1)",
        });
    }
    Ok(())
}

/// Per-group block sizes with their achieved epsilons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPlan {
    pub block_sizes: Vec<usize>,
    pub per_group_epsilon: Vec<f64>,
    pub epsilon_per_step: f64,
    pub epsilon_total: f64,
    pub target_gap: f64,
    pub warnings: Vec<String>,
}

/// The two closed-form epsilons for one group and their minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupEpsilon {
    pub eps1: f64,
    pub eps2: f64,
    pub eps: f64,
    /// Set when an exponent argument exceeded [`OVERFLOW_EXPONENT`] and the
    /// corresponding epsilon saturated to infinity.
    pub overflowed: bool,
}

/// Exponent arguments beyond this saturate the epsilon to infinity.
pub const OVERFLOW_EXPONENT: f64 = 700.0;

/// Evaluate the two per-group epsilon formulas at `(d, beta, C)`.
pub fn epsilon_group(dim: usize, beta: usize, clip: f64) -> Result<GroupEpsilon> {
    if dim < 1 {
        return Err(Error::InvalidDimension {
            name: String::new(),
        });
    }
    if beta < 1 || beta > dim {
        return Err(Error::BlockSizeOutOfRange { beta, dim });
    }
    if !clip.is_finite() || clip <= 0.0 {
        return Err(Error::InvalidClip(clip));
    }
    let d = dim as f64;
    let ratio = beta as f64 / d;
    let x1 = 2.0 * clip / d.sqrt();
    let x2 = 2.0 * clip * ratio.sqrt();
    let mut overflowed = false;
    let eps1 = if x1 > OVERFLOW_EXPONENT {
        overflowed = true;
        f64::INFINITY
    } else {
        2.0 * (d * x1.exp_m1()).ln_1p()
    };
    let eps2 = if x2 > OVERFLOW_EXPONENT {
        overflowed = true;
        f64::INFINITY
    } else {
        2.0 * (ratio * x2.exp_m1()).ln_1p()
    };
    Ok(GroupEpsilon {
        eps1,
        eps2,
        eps: eps1.min(eps2),
        overflowed,
    })
}

/// Compose a per-step epsilon over `steps` iterations:
/// `sqrt(2 T ln(1/delta)) eps + T eps (e^eps - 1)`. Zero budget maps to zero.
pub fn total_privacy(epsilon_per_step: f64, steps: u64, delta: f64) -> Result<f64> {
    if epsilon_per_step.is_nan() || epsilon_per_step < 0.0 {
        return Err(Error::NegativeEpsilon(epsilon_per_step));
    }
    check_delta_open(delta)?;
    if steps < 1 {
        return Err(Error::InvalidSteps);
    }
    let t = steps as f64;
    let eps = epsilon_per_step;
    Ok((2.0 * t * (1.0 / delta).ln()).sqrt() * eps + t * eps * eps.exp_m1())
}

/// Largest block size in `[1, d-1]` whose group epsilon stays at or below
/// `target`; falls back to 1 when none qualifies (and for `d = 1`).
///
/// Binary search is valid because `eps2` is nondecreasing in `beta` while
/// `eps1` does not depend on it.
pub fn largest_block_for_target(dim: usize, clip: f64, target: f64) -> Result<usize> {
    if dim < 1 {
        return Err(Error::InvalidDimension {
            name: String::new(),
        });
    }
    if target.is_nan() || target < 0.0 {
        return Err(Error::NegativeEpsilon(target));
    }
    if dim == 1 {
        return Ok(1);
    }
    let mut low = 1usize;
    let mut high = dim - 1;
    let mut best = 1usize;
    while low <= high {
        let mid = low + (high - low) / 2;
        let eps = epsilon_group(dim, mid, clip)?.eps;
        if eps <= target {
            best = mid;
            low = mid + 1;
        } else {
            if mid == 1 {
                break;
            }
            high = mid - 1;
        }
    }
    Ok(best)
}

struct Probe {
    block_sizes: Vec<usize>,
    per_group_epsilon: Vec<f64>,
    epsilon_per_step: f64,
    epsilon_total: f64,
    gap: f64,
    overflowed: bool,
}

fn evaluate_probe(
    model: &ModelSpec,
    config: &AccountantConfig,
    per_group_target: f64,
    parallel: bool,
) -> Result<Probe> {
    let eval_group = |group: &ParameterGroup| -> Result<(usize, f64, bool)> {
        let beta = largest_block_for_target(group.dim, config.clip_value, per_group_target)?;
        let eps = epsilon_group(group.dim, beta, config.clip_value)?;
        Ok((beta, eps.eps, eps.overflowed))
    };

    #[cfg(feature = "parallel")]
    let per_group: Vec<(usize, f64, bool)> = if parallel {
        model
            .groups
            .par_iter()
            .map(eval_group)
            .collect::<Result<_>>()?
    } else {
        model.groups.iter().map(eval_group).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let per_group: Vec<(usize, f64, bool)> = {
        let _ = parallel;
        model.groups.iter().map(eval_group).collect::<Result<_>>()?
    };

    let block_sizes: Vec<usize> = per_group.iter().map(|r| r.0).collect();
    let per_group_epsilon: Vec<f64> = per_group.iter().map(|r| r.1).collect();
    let overflowed = per_group.iter().any(|r| r.2);
    // Sum in group order so the result is identical with and without rayon.
    let epsilon_per_step: f64 = per_group_epsilon.iter().sum();
    let epsilon_total = total_privacy(epsilon_per_step, config.steps, config.delta)?;
    let gap = (epsilon_total - config.target_epsilon).abs();
    Ok(Probe {
        block_sizes,
        per_group_epsilon,
        epsilon_per_step,
        epsilon_total,
        gap,
        overflowed,
    })
}

/// Convergence threshold for the outer bisection on the per-group target.
pub const OUTER_TOLERANCE: f64 = 1e-6;

fn optimize_impl(
    model: &ModelSpec,
    config: &AccountantConfig,
    parallel: bool,
) -> Result<BlockPlan> {
    model.validate()?;
    config.validate()?;
    let mut low = 0.0_f64;
    let mut high = config.target_epsilon / config.steps as f64;
    let mut best: Option<Probe> = None;

    let consider = |probe: Probe, best: &mut Option<Probe>| {
        let better = match best {
            Some(current) => probe.gap < current.gap,
            None => true,
        };
        if better {
            *best = Some(probe);
        }
    };

    if high - low <= OUTER_TOLERANCE {
        // Degenerate budget interval: evaluate the midpoint once so a plan
        // is always produced.
        let probe = evaluate_probe(model, config, (low + high) / 2.0, parallel)?;
        consider(probe, &mut best);
    }
    while high - low > OUTER_TOLERANCE {
        let mid = (low + high) / 2.0;
        let probe = evaluate_probe(model, config, mid, parallel)?;
        let total = probe.epsilon_total;
        consider(probe, &mut best);
        if total > config.target_epsilon {
            high = mid;
        } else {
            low = mid;
        }
    }

    let chosen = best.expect("at least one probe is always evaluated");
    let mut warnings = Vec::new();
    for (group, &beta) in model.groups.iter().zip(&chosen.block_sizes) {
        if group.dim == 1 {
            warnings.push(format!(
                "group {:?}: dimension 1, shuffling is the identity yet the group still \
                 contributes its formula epsilon",
                group.name
            ));
        }
        debug_assert!(beta >= 1 && beta <= group.dim.saturating_sub(1).max(1));
    }
    if chosen.overflowed {
        warnings.push(format!(
            "an exponent argument exceeded {OVERFLOW_EXPONENT}: epsilon saturated to infinity"
        ));
    }
    Ok(BlockPlan {
        block_sizes: chosen.block_sizes,
        per_group_epsilon: chosen.per_group_epsilon,
        epsilon_per_step: chosen.epsilon_per_step,
        epsilon_total: chosen.epsilon_total,
        target_gap: chosen.gap,
        warnings,
    })
}

/// Find per-group block sizes whose composed privacy lands closest to the
/// configured target.
///
/// Outer bisection on the per-group target epsilon over
/// `[0, target/steps]` down to [`OUTER_TOLERANCE`]; at each probe the inner
/// search picks each group's largest admissible block size. The best probe
/// seen (smallest `|epsilon_total - target|`, earliest on ties) becomes the
/// plan.
pub fn optimize_block_sizes(model: &ModelSpec, config: &AccountantConfig) -> Result<BlockPlan> {
    optimize_impl(model, config, true)
}

/// Sequential reference path of [`optimize_block_sizes`]; same probes, same
/// plan, no rayon. Exists for the benchmark comparison.
pub fn optimize_block_sizes_seq(model: &ModelSpec, config: &AccountantConfig) -> Result<BlockPlan> {
    optimize_impl(model, config, false)
}
