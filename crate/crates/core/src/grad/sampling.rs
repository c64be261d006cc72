//! Monte Carlo sampling of shuffle outcomes for distribution testing.
//!
//! These helpers drive the uniformity and independence checks: draw the
//! block shuffle many times under distinct seeded streams and tally the
//! outcomes. With the `parallel` feature the draws fan out over rayon; the
//! `_seq` variants are the sequential reference used as the fallback and by
//! the benchmarks.

use std::collections::HashMap;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;
use crate::rng;

use super::oracle::ShuffleDistribution;
use super::shuffle::block_shuffle_in;
use super::vector::GradientVector;

/// Bit-pattern key identifying one outcome vector exactly.
pub type OutcomeKey = Vec<u64>;

pub fn outcome_key(components: &[f64]) -> OutcomeKey {
    components.iter().map(|x| x.to_bits()).collect()
}

fn draw(g: &GradientVector, beta: usize, labels: &[u64]) -> OutcomeKey {
    let mut rng = rng::stream(labels);
    let out = block_shuffle_in(g, beta, &mut rng).expect("validated upfront");
    outcome_key(out.components())
}

#[cfg(feature = "parallel")]
fn merge(
    mut into: HashMap<OutcomeKey, u64>,
    from: HashMap<OutcomeKey, u64>,
) -> HashMap<OutcomeKey, u64> {
    for (k, v) in from {
        *into.entry(k).or_insert(0) += v;
    }
    into
}

/// Tally `draws` independent shuffle outcomes under streams labelled
/// `(seed_base, trial)` for `trial = 0..draws`.
pub fn outcome_frequencies_seq(
    g: &GradientVector,
    beta: usize,
    draws: u64,
    seed_base: u64,
) -> Result<HashMap<OutcomeKey, u64>> {
    // Validate once so per-draw failures are impossible.
    block_shuffle_in(g, beta, &mut rng::stream(&[seed_base]))?;
    let mut counts = HashMap::new();
    for trial in 0..draws {
        *counts.entry(draw(g, beta, &[seed_base, trial])).or_insert(0) += 1;
    }
    Ok(counts)
}

#[cfg(feature = "parallel")]
pub fn outcome_frequencies(
    g: &GradientVector,
    beta: usize,
    draws: u64,
    seed_base: u64,
) -> Result<HashMap<OutcomeKey, u64>> {
    block_shuffle_in(g, beta, &mut rng::stream(&[seed_base]))?;
    Ok((0..draws)
        .into_par_iter()
        .fold(HashMap::new, |mut counts, trial| {
            *counts.entry(draw(g, beta, &[seed_base, trial])).or_insert(0) += 1;
            counts
        })
        .reduce(HashMap::new, merge))
}

#[cfg(not(feature = "parallel"))]
pub fn outcome_frequencies(
    g: &GradientVector,
    beta: usize,
    draws: u64,
    seed_base: u64,
) -> Result<HashMap<OutcomeKey, u64>> {
    outcome_frequencies_seq(g, beta, draws, seed_base)
}

/// Tally joint outcomes of two shuffles of the same input drawn from
/// independently labelled streams, one pair per trial.
pub fn joint_frequencies_seq(
    g: &GradientVector,
    beta: usize,
    trials: u64,
    seed_a: u64,
    seed_b: u64,
) -> Result<HashMap<(OutcomeKey, OutcomeKey), u64>> {
    block_shuffle_in(g, beta, &mut rng::stream(&[seed_a]))?;
    let mut counts = HashMap::new();
    for trial in 0..trials {
        let a = draw(g, beta, &[seed_a, trial]);
        let b = draw(g, beta, &[seed_b, trial]);
        *counts.entry((a, b)).or_insert(0) += 1;
    }
    Ok(counts)
}

#[cfg(feature = "parallel")]
pub fn joint_frequencies(
    g: &GradientVector,
    beta: usize,
    trials: u64,
    seed_a: u64,
    seed_b: u64,
) -> Result<HashMap<(OutcomeKey, OutcomeKey), u64>> {
    block_shuffle_in(g, beta, &mut rng::stream(&[seed_a]))?;
    Ok((0..trials)
        .into_par_iter()
        .fold(HashMap::new, |mut counts, trial| {
            let a = draw(g, beta, &[seed_a, trial]);
            let b = draw(g, beta, &[seed_b, trial]);
            *counts.entry((a, b)).or_insert(0) += 1;
            counts
        })
        .reduce(HashMap::new, |mut into, from| {
            for (k, v) in from {
                *into.entry(k).or_insert(0) += v;
            }
            into
        }))
}

#[cfg(not(feature = "parallel"))]
pub fn joint_frequencies(
    g: &GradientVector,
    beta: usize,
    trials: u64,
    seed_a: u64,
    seed_b: u64,
) -> Result<HashMap<(OutcomeKey, OutcomeKey), u64>> {
    joint_frequencies_seq(g, beta, trials, seed_a, seed_b)
}

/// Total-variation distance between empirical counts and an exact
/// distribution: `1/2 * sum |p_hat - p|` over the union of outcomes. An
/// empty tally is treated as the all-zero empirical distribution.
pub fn tv_distance(counts: &HashMap<OutcomeKey, u64>, exact: &ShuffleDistribution) -> f64 {
    let total: u64 = counts.values().sum();
    let n = (total as f64).max(1.0);
    let exact_map = exact.keyed();
    let mut acc = 0.0;
    for (key, p) in &exact_map {
        let p_hat = counts.get(key).map_or(0.0, |&c| c as f64 / n);
        acc += (p_hat - p).abs();
    }
    // Observed outcomes outside the exact support (none, in a correct
    // implementation) still count toward the distance.
    for (key, &c) in counts {
        if !exact_map.contains_key(key) {
            acc += c as f64 / n;
        }
    }
    acc / 2.0
}

/// Total-variation distance between the empirical joint distribution of two
/// shuffles and the product of its empirical marginals.
pub fn pairwise_independence_tv(joint: &HashMap<(OutcomeKey, OutcomeKey), u64>) -> f64 {
    let total: u64 = joint.values().sum();
    let n = (total as f64).max(1.0);
    let mut marginal_a: HashMap<&OutcomeKey, f64> = HashMap::new();
    let mut marginal_b: HashMap<&OutcomeKey, f64> = HashMap::new();
    for ((a, b), &c) in joint {
        *marginal_a.entry(a).or_insert(0.0) += c as f64 / n;
        *marginal_b.entry(b).or_insert(0.0) += c as f64 / n;
    }
    let mut acc = 0.0;
    for (a, pa) in &marginal_a {
        for (b, pb) in &marginal_b {
            let joint_p = joint
                .get(&((*a).clone(), (*b).clone()))
                .map_or(0.0, |&c| c as f64 / n);
            acc += (joint_p - pa * pb).abs();
        }
    }
    acc / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grad::enumerate_block_shuffles;

    fn flat(v: &[f64]) -> GradientVector {
        GradientVector::flat(v.to_vec()).unwrap()
    }

    #[test]
    fn parallel_and_sequential_tallies_agree() {
        let g = flat(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let par = outcome_frequencies(&g, 2, 2000, 17).unwrap();
        let seq = outcome_frequencies_seq(&g, 2, 2000, 17).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn frequencies_close_to_uniform() {
        let g = flat(&[1.0, 2.0, 3.0, 4.0]);
        let counts = outcome_frequencies(&g, 2, 20_000, 3).unwrap();
        let exact = enumerate_block_shuffles(&g, 2).unwrap();
        assert!(tv_distance(&counts, &exact) < 0.02);
    }

    #[test]
    fn independent_streams_factorize() {
        let g = flat(&[1.0, 2.0, 3.0]);
        let joint = joint_frequencies(&g, 1, 20_000, 100, 200).unwrap();
        assert!(pairwise_independence_tv(&joint) < 0.05);
    }

    #[test]
    fn tv_distance_zero_for_exact_counts() {
        let g = flat(&[1.0, 2.0, 3.0, 4.0]);
        let exact = enumerate_block_shuffles(&g, 2).unwrap();
        let mut counts = HashMap::new();
        for (outcome, p) in exact.outcomes() {
            counts.insert(outcome_key(outcome), (p * 1000.0).round() as u64);
        }
        assert!(tv_distance(&counts, &exact) < 1e-12);
    }

    #[test]
    fn tv_distance_of_empty_tally_is_half() {
        let g = flat(&[1.0, 2.0, 3.0, 4.0]);
        let exact = enumerate_block_shuffles(&g, 2).unwrap();
        let tv = tv_distance(&HashMap::new(), &exact);
        assert!((tv - 0.5).abs() < 1e-12);
    }
}
