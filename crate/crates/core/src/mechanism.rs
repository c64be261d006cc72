//! The shuffle generator: per-step gradient privatization under a block
//! plan chosen by the accountant.

use serde::Serialize;

use crate::accountant::{
    epsilon_group, optimize_block_sizes, total_privacy, AccountantConfig, BlockPlan, ModelSpec,
};
use crate::error::{Error, Result};
use crate::grad::{block_shuffle_in, clip, GradientVector};
use crate::rng;

/// Privatized per-group gradients plus the budget spent producing them.
#[derive(Debug, Clone, Serialize)]
pub struct PrivatizedGradients {
    pub grads: Vec<GradientVector>,
    pub epsilon_spent: f64,
    pub delta: f64,
}

/// Spend snapshot: the stored whole-run epsilon and how far along the
/// configured horizon the generator is.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PrivacySpent {
    pub epsilon: f64,
    pub delta: f64,
    pub fraction_elapsed: f64,
}

/// Stateful generator: clips and shuffles each parameter group's gradient
/// with its planned block size, tracking steps against the configured
/// horizon.
///
/// The whole-run epsilon is assigned, not accumulated: the composition
/// formula already prices all `steps` iterations, so `epsilon_spent` jumps
/// from 0 to the plan total on the first call and stays there.
#[derive(Debug, Clone)]
pub struct Generator {
    model: ModelSpec,
    config: AccountantConfig,
    plan: BlockPlan,
    epsilon_spent: f64,
    steps_taken: u64,
}

impl Generator {
    /// Run the block-size optimizer and hold its plan.
    pub fn init(model: ModelSpec, config: AccountantConfig) -> Result<Self> {
        let plan = optimize_block_sizes(&model, &config)?;
        Ok(Self {
            model,
            config,
            plan,
            epsilon_spent: 0.0,
            steps_taken: 0,
        })
    }

    /// Build a generator around explicitly chosen block sizes instead of the
    /// optimizer's. The plan's epsilons are computed from the given sizes and
    /// the target is set to the achieved total, so `target_gap` is zero.
    pub fn with_block_sizes(
        model: ModelSpec,
        block_sizes: Vec<usize>,
        clip_value: f64,
        delta: f64,
        steps: u64,
        batch_size: u64,
    ) -> Result<Self> {
        model.validate()?;
        if block_sizes.len() != model.groups.len() {
            return Err(Error::GroupCountMismatch {
                expected: model.groups.len(),
                got: block_sizes.len(),
            });
        }
        let mut per_group_epsilon = Vec::with_capacity(block_sizes.len());
        let mut warnings = Vec::new();
        for (group, &beta) in model.groups.iter().zip(&block_sizes) {
            let parts = epsilon_group(group.dim, beta, clip_value)?;
            if parts.overflowed {
                warnings.push(format!(
                    "group {:?}: exponent argument exceeded the overflow limit, epsilon is infinite",
                    group.name
                ));
            }
            per_group_epsilon.push(parts.eps);
        }
        let epsilon_per_step: f64 = per_group_epsilon.iter().sum();
        let epsilon_total = total_privacy(epsilon_per_step, steps, delta)?;
        // The achieved total doubles as the target; a saturated (infinite)
        // total is still a valid plan, but the config wants a finite number.
        let target_epsilon = if epsilon_total.is_finite() {
            epsilon_total.max(f64::MIN_POSITIVE)
        } else {
            f64::MAX
        };
        let config = AccountantConfig {
            target_epsilon,
            delta,
            steps,
            clip_value,
            batch_size,
        };
        config.validate()?;
        let plan = BlockPlan {
            block_sizes,
            per_group_epsilon,
            epsilon_per_step,
            epsilon_total,
            target_gap: 0.0,
            warnings,
        };
        Ok(Self {
            model,
            config,
            plan,
            epsilon_spent: 0.0,
            steps_taken: 0,
        })
    }

    pub fn plan(&self) -> &BlockPlan {
        &self.plan
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn config(&self) -> &AccountantConfig {
        &self.config
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    /// Privatize one step's accumulated per-group gradients.
    ///
    /// Each group is clipped to the configured threshold and block-shuffled
    /// with its planned block size under a substream derived from
    /// `(seed, group index, step index)`, so repeated calls with the same
    /// seed still draw independent permutations.
    pub fn generate(
        &mut self,
        grads: &[GradientVector],
        seed: u64,
    ) -> Result<PrivatizedGradients> {
        if self.steps_taken >= self.config.steps {
            return Err(Error::BudgetHorizonExhausted {
                steps: self.config.steps,
            });
        }
        if grads.len() != self.model.groups.len() {
            return Err(Error::GroupCountMismatch {
                expected: self.model.groups.len(),
                got: grads.len(),
            });
        }
        for (group, grad) in self.model.groups.iter().zip(grads) {
            if grad.dim() != group.dim {
                return Err(Error::GroupDimensionMismatch {
                    group: group.name.clone(),
                    expected: group.dim,
                    got: grad.dim(),
                });
            }
        }
        let mut private = Vec::with_capacity(grads.len());
        for (index, grad) in grads.iter().enumerate() {
            let clipped = clip(grad, self.config.clip_value)?;
            let mut stream = rng::stream(&[seed, index as u64, self.steps_taken]);
            private.push(block_shuffle_in(
                &clipped,
                self.plan.block_sizes[index],
                &mut stream,
            )?);
        }
        self.epsilon_spent = self.plan.epsilon_total;
        self.steps_taken += 1;
        Ok(PrivatizedGradients {
            grads: private,
            epsilon_spent: self.epsilon_spent,
            delta: self.config.delta,
        })
    }

    pub fn privacy_spent(&self) -> PrivacySpent {
        PrivacySpent {
            epsilon: self.epsilon_spent,
            delta: self.config.delta,
            fraction_elapsed: self.steps_taken as f64 / self.config.steps as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accountant::ParameterGroup;

    fn model(dims: &[usize]) -> ModelSpec {
        ModelSpec::new(
            dims.iter()
                .enumerate()
                .map(|(i, &dim)| ParameterGroup {
                    name: format!("g{i}"),
                    dim,
                })
                .collect(),
        )
        .unwrap()
    }

    fn config(target: f64, steps: u64) -> AccountantConfig {
        AccountantConfig {
            target_epsilon: target,
            delta: 1e-5,
            steps,
            clip_value: 1.0,
            batch_size: 5,
        }
    }

    #[test]
    fn init_runs_the_optimizer() {
        let gen = Generator::init(model(&[4]), config(0.75, 1)).unwrap();
        assert_eq!(gen.plan().block_sizes, vec![1]);
        let spent = gen.privacy_spent();
        assert_eq!(spent.epsilon, 0.0);
        assert_eq!(spent.fraction_elapsed, 0.0);
    }

    #[test]
    fn init_scalar_group_warns() {
        let gen = Generator::init(model(&[1]), config(5.0, 1)).unwrap();
        assert_eq!(gen.plan().block_sizes, vec![1]);
        assert!(!gen.plan().warnings.is_empty());
    }

    #[test]
    fn init_is_deterministic() {
        let a = Generator::init(model(&[16, 64]), config(3.0, 4)).unwrap();
        let b = Generator::init(model(&[16, 64]), config(3.0, 4)).unwrap();
        assert_eq!(a.plan(), b.plan());
    }

    #[test]
    fn identity_when_unclipped_single_block() {
        let mut gen =
            Generator::with_block_sizes(model(&[4]), vec![4], 10.0, 1e-5, 3, 1).unwrap();
        let g = GradientVector::flat(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let out = gen.generate(std::slice::from_ref(&g), 7).unwrap();
        assert_eq!(out.grads[0], g);
    }

    #[test]
    fn clipped_two_element_shuffle_is_a_permutation() {
        let mut seen = std::collections::BTreeSet::new();
        for seed in 0..40 {
            let mut gen =
                Generator::with_block_sizes(model(&[2]), vec![1], 1.0, 1e-5, 1, 1).unwrap();
            let g = GradientVector::flat(vec![3.0, 4.0]).unwrap();
            let out = gen.generate(std::slice::from_ref(&g), seed).unwrap();
            let c = out.grads[0].components();
            let mut sorted = c.to_vec();
            sorted.sort_by(f64::total_cmp);
            assert!((sorted[0] - 0.6).abs() < 1e-12 && (sorted[1] - 0.8).abs() < 1e-12);
            seen.insert(c.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        }
        assert_eq!(seen.len(), 2, "both orderings should occur across seeds");
    }

    #[test]
    fn spend_jumps_to_plan_total_and_stays() {
        let mut gen =
            Generator::with_block_sizes(model(&[4]), vec![2], 1.0, 1e-5, 10, 1).unwrap();
        let total = gen.plan().epsilon_total;
        let g = GradientVector::flat(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(gen.privacy_spent().epsilon, 0.0);
        for step in 1..=10u64 {
            let out = gen.generate(std::slice::from_ref(&g), 42).unwrap();
            assert_eq!(out.epsilon_spent, total);
            let spent = gen.privacy_spent();
            assert_eq!(spent.epsilon, total);
            assert!((spent.fraction_elapsed - step as f64 / 10.0).abs() < 1e-15);
        }
    }

    #[test]
    fn exceeding_horizon_is_rejected() {
        let mut gen =
            Generator::with_block_sizes(model(&[2]), vec![1], 1.0, 1e-5, 1, 1).unwrap();
        let g = GradientVector::flat(vec![1.0, 2.0]).unwrap();
        gen.generate(std::slice::from_ref(&g), 1).unwrap();
        assert!(matches!(
            gen.generate(std::slice::from_ref(&g), 1),
            Err(Error::BudgetHorizonExhausted { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut gen =
            Generator::with_block_sizes(model(&[4]), vec![2], 1.0, 1e-5, 1, 1).unwrap();
        let wrong = GradientVector::flat(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            gen.generate(std::slice::from_ref(&wrong), 1),
            Err(Error::GroupDimensionMismatch { .. })
        ));
        assert!(matches!(
            gen.generate(&[], 1),
            Err(Error::GroupCountMismatch { .. })
        ));
    }

    #[test]
    fn norm_bound_holds_after_privatization() {
        let mut gen =
            Generator::with_block_sizes(model(&[6]), vec![2], 1.0, 1e-5, 5, 1).unwrap();
        for seed in 0..5 {
            let g =
                GradientVector::flat(vec![5.0, -3.0, 2.0, 8.0, -1.0, 0.5]).unwrap();
            let out = gen.generate(std::slice::from_ref(&g), seed).unwrap();
            assert!(out.grads[0].l2_norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn deterministic_given_identical_inputs() {
        let run = || {
            let mut gen =
                Generator::with_block_sizes(model(&[8, 4]), vec![2, 1], 1.0, 1e-5, 2, 1).unwrap();
            let g0 = GradientVector::flat((1..=8).map(f64::from).collect()).unwrap();
            let g1 = GradientVector::flat(vec![4.0, 3.0, 2.0, 1.0]).unwrap();
            let a = gen.generate(&[g0.clone(), g1.clone()], 99).unwrap();
            let b = gen.generate(&[g0, g1], 99).unwrap();
            (a, b)
        };
        let (a1, b1) = run();
        let (a2, b2) = run();
        assert_eq!(a1.grads, a2.grads);
        assert_eq!(b1.grads, b2.grads);
        // Distinct steps draw distinct permutations even under one seed.
        assert_ne!(
            a1.grads[0].components(),
            b1.grads[0].components()
        );
    }
}
