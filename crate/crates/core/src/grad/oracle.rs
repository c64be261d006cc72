//! Exhaustive enumeration of block-shuffle outcomes at small block counts.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::sampling::{outcome_key, OutcomeKey};
use super::shuffle::apply_block_permutation;
use super::vector::GradientVector;

/// Enumeration is capped at this many blocks (8! = 40320 permutations).
pub const ENUMERATION_BLOCK_LIMIT: usize = 8;

/// The exact distribution of a block shuffle's outputs: every attainable
/// output vector with its probability.
///
/// Outcomes are stored in deterministic (bit-pattern lexicographic) order.
/// Probabilities are multiplicity / m!, so duplicate outputs from different
/// permutations are merged and the total is exactly 1.
#[derive(Debug, Clone)]
pub struct ShuffleDistribution {
    outcomes: Vec<(Vec<f64>, f64)>,
    block_count: usize,
}

impl ShuffleDistribution {
    /// Attainable outputs with their probabilities, in key order.
    pub fn outcomes(&self) -> &[(Vec<f64>, f64)] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn block_count(&self) -> usize {
        self.block_count
    }

    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|(_, p)| p).sum()
    }

    pub fn probability_of(&self, components: &[f64]) -> f64 {
        let key = outcome_key(components);
        self.outcomes
            .iter()
            .find(|(v, _)| outcome_key(v) == key)
            .map_or(0.0, |(_, p)| *p)
    }

    /// Probability-weighted mean of each component across outcomes.
    pub fn component_means(&self) -> Vec<f64> {
        let d = self.outcomes[0].0.len();
        let mut means = vec![0.0; d];
        for (outcome, p) in &self.outcomes {
            for (m, x) in means.iter_mut().zip(outcome) {
                *m += p * x;
            }
        }
        means
    }

    /// Probability-weighted variance of each component across outcomes.
    pub fn component_variances(&self) -> Vec<f64> {
        let means = self.component_means();
        let d = means.len();
        let mut vars = vec![0.0; d];
        for (outcome, p) in &self.outcomes {
            for i in 0..d {
                let dev = outcome[i] - means[i];
                vars[i] += p * dev * dev;
            }
        }
        vars
    }

    /// Shannon entropy of the outcome distribution, in nats.
    pub fn entropy_nats(&self) -> f64 {
        -self
            .outcomes
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(_, p)| p * p.ln())
            .sum::<f64>()
    }

    pub(crate) fn keyed(&self) -> BTreeMap<OutcomeKey, f64> {
        self.outcomes
            .iter()
            .map(|(v, p)| (outcome_key(v), *p))
            .collect()
    }
}

/// Visit every permutation of `0..m` exactly once (Heap's algorithm).
fn for_each_permutation<F: FnMut(&[usize])>(m: usize, mut visit: F) {
    let mut items: Vec<usize> = (0..m).collect();
    let mut stack = vec![0usize; m];
    visit(&items);
    let mut i = 1;
    while i < m {
        if stack[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(stack[i], i);
            }
            visit(&items);
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
}

/// Enumerate all `m!` block permutations of `g` and collect the exact output
/// distribution. Rejected when `m = ceil(d / beta)` exceeds
/// [`ENUMERATION_BLOCK_LIMIT`].
pub fn enumerate_block_shuffles(g: &GradientVector, beta: usize) -> Result<ShuffleDistribution> {
    let d = g.dim();
    if beta < 1 || beta > d {
        return Err(Error::BlockSizeOutOfRange { beta, dim: d });
    }
    let m = d.div_ceil(beta);
    if m > ENUMERATION_BLOCK_LIMIT {
        return Err(Error::TooManyBlocks {
            blocks: m,
            limit: ENUMERATION_BLOCK_LIMIT,
        });
    }
    let mut counts: BTreeMap<OutcomeKey, (Vec<f64>, u64)> = BTreeMap::new();
    let mut total = 0u64;
    for_each_permutation(m, |perm| {
        let outcome = apply_block_permutation(g.components(), beta, perm);
        let key = outcome_key(&outcome);
        counts.entry(key).or_insert((outcome, 0)).1 += 1;
        total += 1;
    });
    debug_assert_eq!(total, (1..=m as u64).product::<u64>());
    let outcomes = counts
        .into_values()
        .map(|(outcome, count)| (outcome, count as f64 / total as f64))
        .collect();
    Ok(ShuffleDistribution {
        outcomes,
        block_count: m,
    })
}
