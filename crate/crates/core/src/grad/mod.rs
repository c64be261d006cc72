//! Gradient containers, clipping, the seeded block shuffle, and exact
//! oracles for the shuffle's distributional properties.

mod oracle;
mod sampling;
mod shuffle;
mod vector;

pub use oracle::{enumerate_block_shuffles, ShuffleDistribution, ENUMERATION_BLOCK_LIMIT};
pub use sampling::{
    joint_frequencies, joint_frequencies_seq, outcome_frequencies, outcome_frequencies_seq,
    outcome_key, pairwise_independence_tv, tv_distance, OutcomeKey,
};
pub use shuffle::{
    block_shuffle, block_shuffle_in, exact_shuffle_variance, per_offset_expectation, ShuffleParams,
};
pub use vector::{clip, stats, GradientStats, GradientVector};
